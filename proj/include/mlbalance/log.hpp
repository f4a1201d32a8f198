#pragma once

#include <functional>
#include <string>

namespace mlbalance {

using WarningHandler = std::function<void(const std::string&)>;

// Library warnings go to stderr unless a handler is installed.
void warn(const std::string& message);

// Returns the previous handler. An empty handler restores the stderr default.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace mlbalance
