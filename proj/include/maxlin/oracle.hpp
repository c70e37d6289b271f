/*
 * Copyright 2026 The maxlin Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MAXLIN_ORACLE_HPP
#define MAXLIN_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "maxlin/bounds.hpp"
#include "maxlin/error.hpp"
#include "maxlin/model.hpp"

namespace maxlin {

/// Outcome of sampling a ball for misclassified points.
struct FalsificationReport {
    VerificationQuery query;
    double radius = 0.0;
    /// Points evaluated, including the center and axis extremes.
    std::size_t samples = 0;
    std::size_t violations = 0;
    /// First few misclassified points.
    std::vector<Vector> witnesses;
};

inline constexpr std::size_t kMaxWitnesses = 8;

namespace detail {

/// Uniform point of the unit l_p ball (before scaling by the radius).
inline Vector sample_unit_ball(Norm p, Eigen::Index n, std::mt19937_64& rng) {
    Vector v(n);
    switch (p) {
    case Norm::Linf: {
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = unif(rng);
        return v;
    }
    case Norm::L2: {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
        const double norm = v.norm();
        if (norm == 0.0) return Vector::Zero(n);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        return v * (std::pow(unif(rng), 1.0 / static_cast<double>(n)) / norm);
    }
    case Norm::L1: {
        // n+1 exponentials normalized by their sum are uniform on the simplex;
        // random signs spread that over the cross-polytope
        std::exponential_distribution<double> expo(1.0);
        std::bernoulli_distribution coin(0.5);
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = expo(rng);
            total += v(i);
        }
        total += expo(rng);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = (coin(rng) ? 1.0 : -1.0) * v(i) / total;
        return v;
    }
    }
    return v;
}

}  // namespace detail

/// Samples B_p(x0, radius) looking for inputs whose predicted class differs
/// from the query label. Draws `samples` random points plus the center and the
/// 2n axis extremes x0 +- radius e_i. For p = inf points are clamped to the
/// [0, 1] pixel domain (widened to contain x0), which keeps them in the ball.
/// A radius of 0 evaluates x0 alone.
inline FalsificationReport falsify(const Network& net, const VerificationQuery& query, double radius,
                                   std::size_t samples, std::uint64_t seed) {
    validate_query(net, query);
    if (!(radius >= 0.0)) throw DomainError("falsify: radius must be >= 0");
    FalsificationReport report;
    report.query = query;
    report.radius = radius;

    const Eigen::Index n = query.x0.size();
    const Vector lo = query.x0.cwiseMin(0.0);
    const Vector hi = query.x0.cwiseMax(1.0);
    auto check = [&](Vector x) {
        if (query.norm == Norm::Linf) x = x.cwiseMax(lo).cwiseMin(hi);
        ++report.samples;
        if (net.predict(x) != query.label) {
            ++report.violations;
            if (report.witnesses.size() < kMaxWitnesses) report.witnesses.push_back(std::move(x));
        }
    };

    check(query.x0);
    if (radius == 0.0) return report;
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector x = query.x0;
        x(i) += radius;
        check(x);
        x(i) = query.x0(i) - radius;
        check(x);
    }
    std::mt19937_64 rng(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        check(query.x0 + radius * detail::sample_unit_ball(query.norm, n, rng));
    }
    return report;
}

inline constexpr std::size_t kMaxBruteForceDim = 3;

/// Observed min/max of every logit over a regular grid of the l_inf box
/// (grid points per axis, endpoints included, so all vertices are visited).
/// An inner approximation of the reachable output set.
inline IntervalBounds brute_force_output_interval(const Network& net, const PerturbationSpec& spec,
                                                  std::size_t grid) {
    if (spec.norm() != Norm::Linf) throw DomainError("brute_force_output_interval: only the l_inf box is supported");
    const auto d = static_cast<std::size_t>(spec.center().size());
    if (d != net.input_size()) throw DomainError("brute_force_output_interval: center size mismatch");
    if (d > kMaxBruteForceDim)
        throw DomainError("brute_force_output_interval: input dimension " + std::to_string(d) + " exceeds 3");
    if (grid < 2) throw DomainError("brute_force_output_interval: grid needs at least 2 points per axis");

    const auto m = static_cast<Eigen::Index>(net.num_classes());
    IntervalBounds out{Vector::Constant(m, std::numeric_limits<double>::infinity()),
                       Vector::Constant(m, -std::numeric_limits<double>::infinity())};
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= grid;
    Vector x(static_cast<Eigen::Index>(d));
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t i = 0; i < d; ++i) {
            const auto step = static_cast<double>(rest % grid) / static_cast<double>(grid - 1);
            rest /= grid;
            const auto e = static_cast<Eigen::Index>(i);
            x(e) = spec.center()(e) - spec.radius() + 2.0 * spec.radius() * step;
        }
        const Vector y = net.forward(x);
        out.lower = out.lower.cwiseMin(y);
        out.upper = out.upper.cwiseMax(y);
    }
    return out;
}

}  // namespace maxlin

#endif  // MAXLIN_ORACLE_HPP
