#pragma once

#include <string_view>

/// Logging front end; keeps spdlog out of libtorch translation units.

namespace posegen {

void log_info(std::string_view msg);
void log_warn(std::string_view msg);

}  // namespace posegen
