#pragma once

#include <string>

#include "fragmem/manager.hpp"

namespace fragmem {

inline constexpr const char* kIndexFormat = "fragmem-index/1";

/// Single JSON document; keys are emitted in sorted order so identical
/// indexes serialise to identical bytes.
std::string index_to_json(const Index& index);
/// Throws IndexFormatError on a version mismatch or dangling cross-reference.
Index index_from_json(const std::string& json);

void save_index(const Index& index, const std::string& path);
Index load_index(const std::string& path);

} // namespace fragmem
