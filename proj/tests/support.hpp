#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

// Shared helpers for the test binaries.
namespace testsupport {

inline std::filesystem::path fixture_dir() { return MAMMOEVAL_FIXTURE_DIR; }
inline std::filesystem::path repo_dir() { return MAMMOEVAL_REPO_DIR; }

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mammoeval_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Deterministic scores on a dyadic grid so ties are exact and monotone
// transforms stay injective.
inline double grid_score(std::mt19937_64& gen, int cells = 16) {
    return static_cast<double>(gen() % (cells + 1)) / cells;
}

} // namespace testsupport
