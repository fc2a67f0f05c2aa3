#pragma once

#include <string>
#include <string_view>

#include "agentos/domain.hpp"

namespace agentos {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 over the canonical serialization of a JSON value.
inline std::string json_digest(const Json& j) { return sha256_hex(canonical(j)); }

}  // namespace agentos
