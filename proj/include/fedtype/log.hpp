#pragma once

#include <string>

namespace fedtype::log {

// Verbosity is read once from the FEDTYPE_LOG environment variable:
// 0 = quiet, 1 = warnings + per-round progress (default), 2 = debug.
int level();

void warn(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace fedtype::log
