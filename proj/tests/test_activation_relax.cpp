#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace maxlin;

namespace {

double up(const RelaxationRow& r, double x) { return r.upper_coeffs(0) * x + r.upper_offset; }
double lo(const RelaxationRow& r, double x) { return r.lower_coeffs(0) * x + r.lower_offset; }

struct GridSlack {
    double upper = INFINITY;  // min of upper(x) - f(x)
    double lower = INFINITY;  // min of f(x) - lower(x)
    double argmin_upper = 0.0;
};

GridSlack grid_slack(const RelaxationRow& r, ActivationKind kind, double l, double u, int n) {
    GridSlack s;
    for (int k = 0; k <= n; ++k) {
        const double x = l + (u - l) * k / n;
        const double fx = kind == ActivationKind::AdaptiveReLU ? std::max(x, 0.0) : apply_activation(kind, x);
        if (up(r, x) - fx < s.upper) {
            s.upper = up(r, x) - fx;
            s.argmin_upper = x;
        }
        s.lower = std::min(s.lower, fx - lo(r, x));
    }
    return s;
}

}  // namespace

TEST(ReluRelax, Unstable) {
    const auto r = relu_relax(-1, 2);
    EXPECT_NEAR(r.upper_coeffs(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.upper_offset, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(r.lower_coeffs(0), 1.0);
    EXPECT_EQ(r.lower_offset, 0.0);
}

TEST(ReluRelax, Active) {
    const auto r = relu_relax(1, 3);
    EXPECT_EQ(r.upper_coeffs(0), 1.0);
    EXPECT_EQ(r.upper_offset, 0.0);
    EXPECT_EQ(r.lower_coeffs(0), 1.0);
    EXPECT_EQ(r.lower_offset, 0.0);
}

TEST(ReluRelax, Inactive) {
    const auto r = relu_relax(-3, -1);
    EXPECT_EQ(r.upper_coeffs(0), 0.0);
    EXPECT_EQ(r.upper_offset, 0.0);
    EXPECT_EQ(r.lower_coeffs(0), 0.0);
}

TEST(ReluRelax, TieTakesZeroSlope) {
    const auto r = relu_relax(-1, 1);
    EXPECT_DOUBLE_EQ(r.upper_coeffs(0), 0.5);
    EXPECT_DOUBLE_EQ(r.upper_offset, 0.5);
    EXPECT_EQ(r.lower_coeffs(0), 0.0);
}

TEST(ReluRelax, RejectsCrossedInterval) { EXPECT_THROW(relu_relax(1, 0), DomainError); }

TEST(AdaptiveReluRelax, SlopeEndpoints) {
    EXPECT_EQ(adaptive_relu_relax(-2, 2, 0.0).lower_coeffs(0), 0.0);
    EXPECT_EQ(adaptive_relu_relax(-2, 2, 1.0).lower_coeffs(0), 1.0);
    EXPECT_EQ(adaptive_relu_relax(-2, 2, 1.0).lower_offset, 0.0);
}

TEST(AdaptiveReluRelax, GivenSlope) {
    const auto r = adaptive_relu_relax(-1, 3, 0.25);
    EXPECT_DOUBLE_EQ(r.upper_coeffs(0), 0.75);
    EXPECT_DOUBLE_EQ(r.upper_offset, 0.75);
    EXPECT_DOUBLE_EQ(r.lower_coeffs(0), 0.25);
    EXPECT_DOUBLE_EQ(r.lower_offset, 0.0);
}

TEST(AdaptiveReluRelax, RejectsSlopeOutsideUnitInterval) {
    EXPECT_THROW(adaptive_relu_relax(-1, 1, -0.1), DomainError);
    EXPECT_THROW(adaptive_relu_relax(-1, 1, 1.5), DomainError);
}

TEST(SShapeRelax, PointInterval) {
    const auto r = sshape_relax(ActivationKind::Sigmoid, 0, 0);
    EXPECT_DOUBLE_EQ(up(r, 0), 0.5);
    EXPECT_DOUBLE_EQ(lo(r, 0), 0.5);
    EXPECT_EQ(r.upper_coeffs(0), 0.0);
    EXPECT_EQ(r.lower_coeffs(0), 0.0);
}

TEST(SShapeRelax, TanhConcaveInterval) {
    const auto r = sshape_relax(ActivationKind::Tanh, 1, 2);
    const double t = std::tanh(1.5);
    EXPECT_NEAR(r.upper_coeffs(0), 1 - t * t, 1e-15);
    EXPECT_NEAR(up(r, 1.5), t, 1e-15);
    EXPECT_NEAR(lo(r, 1), std::tanh(1.0), 1e-15);
    EXPECT_NEAR(lo(r, 2), std::tanh(2.0), 1e-15);
}

TEST(SShapeRelax, TanhConvexInterval) {
    const auto r = sshape_relax(ActivationKind::Tanh, -2, -1);
    const double t = std::tanh(-1.5);
    EXPECT_NEAR(r.lower_coeffs(0), 1 - t * t, 1e-15);
    EXPECT_NEAR(lo(r, -1.5), t, 1e-15);
    EXPECT_NEAR(up(r, -2), std::tanh(-2.0), 1e-15);
    EXPECT_NEAR(up(r, -1), std::tanh(-1.0), 1e-15);
}

TEST(SShapeRelax, SigmoidMixedInterval) {
    const auto r = sshape_relax(ActivationKind::Sigmoid, -3, 3);
    const auto sig = [](double x) { return 1 / (1 + std::exp(-x)); };
    EXPECT_NEAR(r.upper_coeffs(0), (sig(3) - sig(-3)) / 6, 1e-15);
    EXPECT_NEAR(r.upper_coeffs(0), 0.150858, 5e-6);
    const auto s = grid_slack(r, ActivationKind::Sigmoid, -3, 3, 10000);
    EXPECT_GE(s.upper, -1e-12);
    EXPECT_GE(s.lower, -1e-12);
    EXPECT_LT(s.upper, 1e-6);
    EXPECT_GT(s.argmin_upper, 0.0);
}

TEST(ActivationRelax, GridSoundness) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> endpoint(-8, 8), unit(0, 1);
    const ActivationKind kinds[] = {ActivationKind::ReLU, ActivationKind::AdaptiveReLU, ActivationKind::Sigmoid,
                                    ActivationKind::Tanh, ActivationKind::Arctan};
    for (ActivationKind kind : kinds) {
        for (int trial = 0; trial < 400; ++trial) {
            double l = endpoint(rng), u = endpoint(rng);
            if (l > u) std::swap(l, u);
            if (trial % 10 == 0) u = l;
            const double a = unit(rng);
            const auto r = relax_activation(ActivationLayer{kind, a, Shape::vector(1)}, l, u);
            const auto s = grid_slack(r, kind, l, u, 1000);
            EXPECT_GE(s.upper, -1e-9) << to_string(kind) << " [" << l << ", " << u << "]";
            EXPECT_GE(s.lower, -1e-9) << to_string(kind) << " [" << l << ", " << u << "]";
        }
    }
}

TEST(ActivationRelax, CarriesIndex) {
    EXPECT_EQ(relax_activation(ActivationLayer{ActivationKind::Tanh, 0, Shape::vector(9)}, -1, 1, 7).fan_in[0], 7u);
}
