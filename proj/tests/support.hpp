#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tm2d/numerics/ops.hpp"
#include "tm2d/numerics/rng.hpp"
#include "tm2d/numerics/tensor.hpp"

namespace tm2d::testing {

inline num::Tensor rand_tensor(num::Shape shape, num::Rng& rng, double scale = 1.0) {
    return num::Tensor::uniform(std::move(shape), rng, -scale, scale);
}

// sum(out * R) with R fixed, so every output element gets a distinct upstream gradient.
inline num::Tensor probe(const num::Tensor& out, std::uint64_t seed = 99) {
    num::Rng rng(seed);
    const auto r = num::Tensor::uniform(out.shape(), rng, -1.0, 1.0);
    return num::sum(num::mul(out, r));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("tm2d_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

}  // namespace tm2d::testing
