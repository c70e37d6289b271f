#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace maxlin;
using maxlin::test::vec;

TEST(SampleUnitBall, StaysInside) {
    std::mt19937_64 rng(8);
    for (Eigen::Index n : {1, 2, 5, 16}) {
        for (int s = 0; s < 2000; ++s) {
            EXPECT_LE(detail::sample_unit_ball(Norm::L1, n, rng).lpNorm<1>(), 1.0 + 1e-12);
            EXPECT_LE(detail::sample_unit_ball(Norm::L2, n, rng).norm(), 1.0 + 1e-12);
            EXPECT_LE(detail::sample_unit_ball(Norm::Linf, n, rng).lpNorm<Eigen::Infinity>(), 1.0 + 1e-12);
        }
    }
}

TEST(SampleUnitBall, ReachesTheBoundary) {
    std::mt19937_64 rng(9);
    double best1 = 0, best2 = 0, bestinf = 0;
    for (int s = 0; s < 5000; ++s) {
        best1 = std::max(best1, detail::sample_unit_ball(Norm::L1, 2, rng).lpNorm<1>());
        best2 = std::max(best2, detail::sample_unit_ball(Norm::L2, 2, rng).norm());
        bestinf = std::max(bestinf, detail::sample_unit_ball(Norm::Linf, 2, rng).lpNorm<Eigen::Infinity>());
    }
    EXPECT_GT(best1, 0.99);
    EXPECT_GT(best2, 0.99);
    EXPECT_GT(bestinf, 0.99);
}

TEST(Falsify, ZeroRadiusEvaluatesCentreOnly) {
    const Network net = test::toy_network();
    auto r = falsify(net, {test::toy_center(), 0, Norm::Linf, {}}, 0.0, 1000, 1);
    EXPECT_EQ(r.samples, 1u);
    EXPECT_EQ(r.violations, 0u);
    r = falsify(net, {test::toy_center(), 1, Norm::Linf, {}}, 0.0, 1000, 1);
    EXPECT_EQ(r.violations, 1u);
    ASSERT_EQ(r.witnesses.size(), 1u);
    EXPECT_EQ(r.witnesses[0], test::toy_center());
}

TEST(Falsify, ConstantNetworkNeverFlips) {
    const Network net("const", Shape::vector(3), {AffineLayer{Matrix::Zero(3, 3), vec({0, 1, 0})}}, 3);
    for (Norm p : {Norm::L1, Norm::L2, Norm::Linf}) {
        const auto r = falsify(net, {vec({0.2, 0.5, 0.9}), 1, p, {}}, 5.0, 2000, 3);
        EXPECT_EQ(r.violations, 0u);
        EXPECT_EQ(r.samples, 2000u + 1u + 6u);
    }
}

TEST(Falsify, FindsFlipsBeyondThreshold) {
    Matrix w(2, 1);
    w << 0, 1;
    const Network net("stub", Shape::vector(1), {AffineLayer{w, vec({0, -0.6})}}, 2);
    const auto r = falsify(net, {vec({0.5}), 0, Norm::L2, {}}, 0.3, 500, 4);
    EXPECT_GT(r.violations, 0u);
    EXPECT_LE(r.witnesses.size(), kMaxWitnesses);
    for (const auto& x : r.witnesses) EXPECT_GT(x(0), 0.6);
}

TEST(Falsify, CertifiedRadiusHasNoViolations) {
    const auto suite = random_network_suite(3, 31);
    for (const auto& net : suite) {
        const auto q = random_query(net, Norm::Linf, 2);
        const auto c = binary_search(net, q, PoolRule::MaxLin);
        EXPECT_EQ(falsify(net, q, c.certified_radius, 10000, 5).violations, 0u) << net.name();
    }
}

TEST(Falsify, SeedIsDeterministic) {
    const Network net = random_network({3, ActivationKind::Tanh, 3, 4});
    const auto q = random_query(net, Norm::L2, 1);
    const auto a = falsify(net, q, 2.0, 500, 42);
    const auto b = falsify(net, q, 2.0, 500, 42);
    EXPECT_EQ(a.violations, b.violations);
    EXPECT_EQ(a.witnesses, b.witnesses);
}

TEST(BruteForce, LinearNetworkMatchesAnalyzer) {
    Matrix w(2, 3);
    w << 1, -2, 0.5, -1, 0.25, 3;
    const Network net("lin", Shape::vector(3), {AffineLayer{w, vec({0.1, -0.1})}}, 2);
    const PerturbationSpec spec(vec({0.3, 0.6, 0.1}), 0.2, Norm::Linf);
    const auto oracle = brute_force_output_interval(net, spec, 2);
    const auto out = analyze(net, spec, PoolRule::MaxLin).output();
    EXPECT_LT((oracle.lower - out.lower).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((oracle.upper - out.upper).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BruteForce, ToyContainedInAnalyzerBounds) {
    const Network net = test::toy_network();
    const PerturbationSpec spec(test::toy_center(), 1.0, Norm::Linf);
    const auto oracle = brute_force_output_interval(net, spec, 201);
    const auto out = analyze(net, spec, PoolRule::MaxLin).output();
    for (Eigen::Index i = 0; i < 2; ++i) {
        EXPECT_GE(oracle.lower(i), out.lower(i) - 1e-12);
        EXPECT_LE(oracle.upper(i), out.upper(i) + 1e-12);
    }
}

TEST(BruteForce, Preconditions) {
    const Network net = test::toy_network();
    EXPECT_THROW(brute_force_output_interval(net, PerturbationSpec(test::toy_center(), 1, Norm::L2), 3), DomainError);
    EXPECT_THROW(brute_force_output_interval(net, PerturbationSpec(test::toy_center(), 1, Norm::Linf), 1), DomainError);
    const Network wide("w", Shape::vector(4), {AffineLayer{Matrix::Ones(2, 4), vec({0, 0})}}, 2);
    EXPECT_THROW(brute_force_output_interval(wide, PerturbationSpec(Vector::Zero(4), 1, Norm::Linf), 3), DomainError);
}
