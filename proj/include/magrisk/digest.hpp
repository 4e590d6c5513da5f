// digest.hpp - SHA-256 content digests (hex) for specs, traces and caches.
#pragma once

#include <string>
#include <string_view>

namespace magrisk {

std::string sha256Hex(std::string_view bytes);

} // namespace magrisk
