#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "y00lab/constellation.hpp"

namespace testing_support {

inline unsigned workers() { return std::max(2u, std::min(8u, std::thread::hardware_concurrency())); }

inline std::filesystem::path fresh_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("y00lab_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::size_t count_lines(const std::filesystem::path& p)
{
    const auto text = read_file(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Random Custom constellation. Balanced specs permute one shared point set
/// per basis, so every basis induces the same outcome distribution.
inline y00lab::ConstellationSpec random_custom(std::mt19937_64& gen, bool balanced)
{
    std::uniform_int_distribution<std::size_t> pick_l(2, 4), pick_m(2, 5);
    std::uniform_real_distribution<double> coord(-8.0, 8.0);
    const std::size_t L = pick_l(gen), M = pick_m(gen);
    std::vector<y00lab::Amplitude> shared(L);
    for (auto& p : shared)
        p = {coord(gen), coord(gen)};
    std::vector<y00lab::Amplitude> pts;
    for (std::size_t m = 0; m < M; ++m) {
        auto row = shared;
        if (balanced) {
            std::shuffle(row.begin(), row.end(), gen);
        } else {
            for (auto& p : row)
                p = {coord(gen), coord(gen)};
        }
        pts.insert(pts.end(), row.begin(), row.end());
    }
    return y00lab::ConstellationSpec::custom(L, M, pts);
}

} // namespace testing_support
