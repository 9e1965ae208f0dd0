#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fragmem/fragments.hpp"

namespace fragmem::testkit {

inline std::string fixture_dir() { return FRAGMEM_FIXTURE_DIR; }

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<SourceFile> load_repo(const std::string& name) {
    const std::filesystem::path root = std::filesystem::path(fixture_dir()) / name;
    std::vector<SourceFile> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        files.push_back({std::filesystem::relative(e.path(), root).generic_string(), read_text(e.path())});
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return files;
}

/// n numbered lines "line 0\n" ... "line n-1\n".
inline std::string numbered_lines(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += "line " + std::to_string(i) + "\n";
    return s;
}

} // namespace fragmem::testkit
