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

#ifndef MAXLIN_ACTIVATION_RELAX_HPP
#define MAXLIN_ACTIVATION_RELAX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "maxlin/bounds.hpp"
#include "maxlin/error.hpp"
#include "maxlin/model.hpp"

namespace maxlin {

namespace detail {

inline void check_interval(double l, double u) {
    if (!(l <= u)) throw DomainError("relaxation interval has l > u (l=" + std::to_string(l) + ", u=" + std::to_string(u) + ")");
}

inline double activation_derivative(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::Sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
    }
    case ActivationKind::Tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case ActivationKind::Arctan: return 1.0 / (1.0 + x * x);
    default: return x > 0.0 ? 1.0 : 0.0;
    }
}

inline constexpr double kTangentTolerance = 1e-9;
inline constexpr int kTangentMaxIterations = 200;

/// Point t in [lo, hi] where f'(t) = slope, for f' monotone on the interval.
/// `decreasing` selects the concave branch (f' falls as t grows).
inline double tangent_point(ActivationKind kind, double slope, double lo, double hi, bool decreasing) {
    for (int it = 0; it < kTangentMaxIterations && hi - lo > kTangentTolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        const bool right_of_target = decreasing ? activation_derivative(kind, mid) < slope
                                                : activation_derivative(kind, mid) > slope;
        if (right_of_target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Neuron-wise ReLU relaxation. Unstable neurons get the chord through
/// (l, 0) and (u, u) as upper bound and lambda * x as lower bound, with
/// lambda = 1 iff u > |l| (the tie u = |l| picks 0).
inline RelaxationRow relu_relax(double l, double u, std::size_t index = 0) {
    detail::check_interval(l, u);
    if (u <= 0.0) return RelaxationRow::scalar(index, 0.0, 0.0, 0.0, 0.0);
    if (l >= 0.0) return RelaxationRow::scalar(index, 1.0, 0.0, 1.0, 0.0);
    const double slope = u / (u - l);
    const double lambda = u > -l ? 1.0 : 0.0;
    return RelaxationRow::scalar(index, lambda, 0.0, slope, -slope * l);
}

/// ReLU relaxation whose unstable lower bound is a * x for a given a in [0, 1].
inline RelaxationRow adaptive_relu_relax(double l, double u, double a, std::size_t index = 0) {
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("adaptive ReLU slope must lie in [0,1], got " + std::to_string(a));
    RelaxationRow row = relu_relax(l, u, index);
    if (l < 0.0 && u > 0.0) row.lower_coeffs(0) = a;
    return row;
}

/// Relaxation of sigmoid, tanh and arctan, all convex on (-inf, 0] and
/// concave on [0, inf).
///
/// Upper bound: tangent at the midpoint on a concave interval, chord on a
/// convex one. When the interval straddles zero the upper line takes the
/// chord slope and is lifted until it touches the concave branch; the contact
/// point is found by bisection on f'(t) = slope. The lower bound mirrors this
/// (chord on concave, midpoint tangent on convex, lowered parallel chord on
/// mixed intervals).
inline RelaxationRow sshape_relax(ActivationKind kind, double l, double u, std::size_t index = 0) {
    if (!is_sshaped(kind)) throw DomainError("sshape_relax: activation is not S-shaped");
    detail::check_interval(l, u);
    const auto f = [kind](double x) { return apply_activation(kind, x); };
    const auto df = [kind](double x) { return detail::activation_derivative(kind, x); };

    if (l == u) return RelaxationRow::scalar(index, 0.0, f(l), 0.0, f(l));

    const double fl = f(l);
    const double fu = f(u);
    const double chord = (fu - fl) / (u - l);
    const double mid = 0.5 * (l + u);

    double up_slope = 0.0, up_offset = 0.0, lo_slope = 0.0, lo_offset = 0.0;
    if (l >= 0.0) {
        up_slope = df(mid);
        up_offset = f(mid) - up_slope * mid;
        lo_slope = chord;
        lo_offset = fl - chord * l;
    } else if (u <= 0.0) {
        up_slope = chord;
        up_offset = fl - chord * l;
        lo_slope = df(mid);
        lo_offset = f(mid) - lo_slope * mid;
    } else {
        // f' <= f'(0) everywhere, so the chord slope is always reachable on the
        // concave side unless it is already below f'(u); then t = u and the line
        // is the chord itself.
        const double t_up = df(u) >= chord ? u : detail::tangent_point(kind, chord, 0.0, u, true);
        const double t_lo = df(l) >= chord ? l : detail::tangent_point(kind, chord, l, 0.0, false);
        up_slope = lo_slope = chord;
        up_offset = std::max({f(t_up) - chord * t_up, fl - chord * l, fu - chord * u});
        lo_offset = std::min({f(t_lo) - chord * t_lo, fl - chord * l, fu - chord * u});
    }
    return RelaxationRow::scalar(index, lo_slope, lo_offset, up_slope, up_offset);
}

/// Relaxation for one neuron of an activation layer.
inline RelaxationRow relax_activation(const ActivationLayer& layer, double l, double u, std::size_t index = 0) {
    switch (layer.kind) {
    case ActivationKind::ReLU: return relu_relax(l, u, index);
    case ActivationKind::AdaptiveReLU: return adaptive_relu_relax(l, u, layer.slope, index);
    default: return sshape_relax(layer.kind, l, u, index);
    }
}

}  // namespace maxlin

#endif  // MAXLIN_ACTIVATION_RELAX_HPP
