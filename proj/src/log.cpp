#include "fedtype/log.hpp"

#include <cstdlib>
#include <iostream>

namespace fedtype::log {

int level() {
    static const int lvl = [] {
        const char* env = std::getenv("FEDTYPE_LOG");
        if (env == nullptr) return 1;
        const std::string v(env);
        if (v == "0" || v == "quiet") return 0;
        if (v == "2" || v == "debug") return 2;
        return 1;
    }();
    return lvl;
}

void warn(const std::string& msg) {
    if (level() >= 1) std::cerr << "[fedtype] warning: " << msg << "\n";
}

void info(const std::string& msg) {
    if (level() >= 1) std::cerr << "[fedtype] " << msg << "\n";
}

void debug(const std::string& msg) {
    if (level() >= 2) std::cerr << "[fedtype] debug: " << msg << "\n";
}

}  // namespace fedtype::log
