#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "carto/corpus.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("carto_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline carto::PaperRecord paper(std::string id, int year, bool ai = false) {
    carto::PaperRecord p;
    p.id = std::move(id);
    p.title = "Paper " + p.id;
    p.year = year;
    p.venue_id = "v";
    p.ref_count = 10;
    p.citation_count = 10;
    p.ai_flag = ai;
    return p;
}

// Zero-padded so that lexicographic and numeric order agree.
inline std::string fmt_id(std::size_t i) {
    std::string s = std::to_string(i);
    return "p" + std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

inline double rel_diff(double a, double b) {
    const double scale = std::max({1e-300, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
}

}  // namespace testing
