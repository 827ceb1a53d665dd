#pragma once

#include <string>
#include <string_view>

namespace fedsel {

/// SHA-256 digest of `text`, as 64 lowercase hex characters.
std::string sha256_hex(std::string_view text);

}  // namespace fedsel
