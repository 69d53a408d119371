#pragma once

#include <filesystem>

namespace testing_paths {

inline std::filesystem::path data(const char* rel) { return std::filesystem::path(CIMSIM_DATA_DIR) / rel; }
inline std::filesystem::path golden(const char* rel) { return std::filesystem::path(CIMSIM_GOLDEN_DIR) / rel; }

} // namespace testing_paths
