#pragma once

#include <functional>
#include <string>

namespace fso {

using WarningHandler = std::function<void(const std::string&)>;

/// Replace the process-wide warning sink (default: "warning: ..." on stderr).
/// Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace fso
