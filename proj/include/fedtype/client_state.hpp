#pragma once

#include <vector>

#include "fedtype/data.hpp"
#include "fedtype/dense_net.hpp"

namespace fedtype {

// One simulated client. The private net's architecture is fixed for the whole
// run and never leaves the client; the proxy architecture is identical across
// clients and is the only thing ever communicated.
struct ClientState {
    int id = 0;
    DenseNet private_net;
    DenseNet proxy_net;
    ClientSplit splits;
    // Proxy validation accuracy after each completed local epoch, across
    // rounds. The last two entries drive the performance delta.
    std::vector<double> acc_history;
};

}  // namespace fedtype
