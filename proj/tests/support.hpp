#ifndef MAXLIN_TESTS_SUPPORT_HPP
#define MAXLIN_TESTS_SUPPORT_HPP

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "maxlin.hpp"

namespace maxlin::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(MAXLIN_FIXTURE_DIR) / name; }

/// affine(2->4) -> relu -> maxpool over {0,1},{2,3} -> affine(2->2).
inline Network toy_network() {
    Matrix w1(4, 2);
    w1 << 1, 1, -1, -1, 2, -2, 1, 0;
    Matrix w2(2, 2);
    w2 << 1, 1, -1, 1;
    std::vector<Layer> layers{
        AffineLayer{w1, Vector::Zero(4)},
        ActivationLayer{ActivationKind::ReLU, 0.0, Shape::vector(4)},
        MaxPoolLayer{Shape::image(1, 4, 1), 1, 2, 2, 0},
        AffineLayer{w2, Vector::Zero(2)},
    };
    return Network("toy", Shape::vector(2), std::move(layers), 2);
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline Vector uniform_in_box(const Vector& l, const Vector& u, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x(l.size());
    for (Eigen::Index i = 0; i < l.size(); ++i) x(i) = l(i) + unit(rng) * (u(i) - l(i));
    return x;
}

inline Vector toy_center() { return vec({0.0, 1.0}); }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("maxlin_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace maxlin::test

#endif  // MAXLIN_TESTS_SUPPORT_HPP
