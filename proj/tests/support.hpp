#pragma once

// Shared helpers for the test binaries.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "drivegaze/error.hpp"
#include "drivegaze/raster.hpp"

namespace testing {

inline drivegaze::SaliencyMap random_map(std::mt19937_64& rng, int w, int h, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    drivegaze::SaliencyMap m(w, h);
    for (auto& v : m.values()) {
        v = d(rng);
    }
    return m;
}

/// Directory produced by the fixture-setup test (make_fixture).
inline std::filesystem::path fixture_dir()
{
    const char* dir = std::getenv("DRIVEGAZE_FIXTURE");
    REQUIRE_MESSAGE(dir != nullptr, "DRIVEGAZE_FIXTURE is not set; run through ctest");
    return dir;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("drivegaze_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing

/// CHECK that `expr` throws drivegaze::Error with the given code.
#define CHECK_ERRC(expr, errc)                                                  \
    do {                                                                        \
        bool thrown_ = false;                                                   \
        try {                                                                   \
            (void)(expr);                                                       \
        } catch (const drivegaze::Error& e_) {                                  \
            thrown_ = true;                                                     \
            CHECK_MESSAGE(e_.code() == (errc), e_.what());                      \
        }                                                                       \
        CHECK_MESSAGE(thrown_, "expected drivegaze::Error from " #expr);        \
    } while (0)
