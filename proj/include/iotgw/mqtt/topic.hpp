#pragma once

#include <string_view>

namespace iotgw::mqtt {

/// Nonempty, at most 65535 bytes, no NUL, no wildcard characters.
bool valid_topic_name(std::string_view name) noexcept;

/// Nonempty, no NUL; "+" fills a whole level; "#" fills the last level only.
bool valid_topic_filter(std::string_view filter) noexcept;

/// Level-wise match. "#" also matches the parent level ("a/#" matches "a").
/// Both arguments are assumed valid.
bool topic_matches(std::string_view filter, std::string_view name) noexcept;

}  // namespace iotgw::mqtt
