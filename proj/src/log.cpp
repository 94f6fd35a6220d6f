#include "posegen/log.hpp"

#include <spdlog/spdlog.h>

namespace posegen {

void log_info(std::string_view msg) { spdlog::info("{}", msg); }
void log_warn(std::string_view msg) { spdlog::warn("{}", msg); }

}  // namespace posegen
