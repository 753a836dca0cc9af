#pragma once

#include <functional>
#include <string_view>

namespace newsfactor::log {

using WarningSink = std::function<void(std::string_view)>;

// Replaces the process-wide warning sink and returns the previous one. The
// default sink prints "warning: <msg>" to stderr.
WarningSink set_warning_sink(WarningSink sink);

void warn(std::string_view message);

}  // namespace newsfactor::log
