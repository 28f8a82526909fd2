#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "scengen/rng.hpp"
#include "scengen/normal.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("scengen_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Deterministic standard normal draws.
inline std::vector<double> normals(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = scengen::normal_quantile(scengen::rng::open01(scengen::rng::at(seed, {stream, i})));
    return out;
}

inline std::vector<double> uniforms(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = scengen::rng::open01(scengen::rng::at(seed, {stream, i}));
    return out;
}

inline const std::filesystem::path fixture_dir{SCENGEN_FIXTURE_DIR};

}  // namespace testing
