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

#ifndef MAXLIN_MAXPOOL_RELAX_HPP
#define MAXLIN_MAXPOOL_RELAX_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>

#include "maxlin/bounds.hpp"
#include "maxlin/error.hpp"
#include "maxlin/model.hpp"

namespace maxlin {

/// How a max-pool window is relaxed. DeepPolyStyle and IntervalConstant are
/// frozen comparison baselines, not reproductions of any particular tool.
enum class PoolRule { MaxLin, DeepPolyStyle, IntervalConstant };

/// Command-line spelling.
inline std::string_view to_string(PoolRule rule) {
    switch (rule) {
    case PoolRule::MaxLin: return "maxlin";
    case PoolRule::DeepPolyStyle: return "deeppoly";
    case PoolRule::IntervalConstant: return "interval";
    }
    return "?";
}

/// Label used in reports.
inline std::string_view display_name(PoolRule rule) {
    switch (rule) {
    case PoolRule::MaxLin: return "MaxLin";
    case PoolRule::DeepPolyStyle: return "DeepPoly-style";
    case PoolRule::IntervalConstant: return "interval";
    }
    return "?";
}

inline PoolRule parse_pool_rule(std::string_view s) {
    if (s == "maxlin") return PoolRule::MaxLin;
    if (s == "deeppoly") return PoolRule::DeepPolyStyle;
    if (s == "interval") return PoolRule::IntervalConstant;
    throw DomainError("unknown max-pool rule '" + std::string(s) + "' (expected maxlin, deeppoly or interval)");
}

namespace detail {

inline void check_window(const Vector& l, const Vector& u) {
    if (l.size() == 0) throw DomainError("max-pool window is empty");
    if (l.size() != u.size()) throw DomainError("max-pool window bounds have different lengths");
    for (Eigen::Index k = 0; k < l.size(); ++k) {
        if (!(l(k) <= u(k))) throw DomainError("max-pool window has l > u at position " + std::to_string(k));
    }
}

inline RelaxationRow window_row(Eigen::Index n) {
    RelaxationRow r;
    r.fan_in.resize(static_cast<std::size_t>(n));
    std::iota(r.fan_in.begin(), r.fan_in.end(), std::size_t{0});
    r.lower_coeffs = Vector::Zero(n);
    r.upper_coeffs = Vector::Zero(n);
    return r;
}

inline RelaxationRow identity_window(Eigen::Index n, Eigen::Index i) {
    RelaxationRow r = window_row(n);
    r.lower_coeffs(i) = 1.0;
    r.upper_coeffs(i) = 1.0;
    return r;
}

/// Argmax of v ignoring position `skip` (-1 skips nothing); ties go to the
/// smallest index.
inline Eigen::Index argmax_skip(const Vector& v, Eigen::Index skip) {
    Eigen::Index best = -1;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (k == skip) continue;
        if (best < 0 || v(k) > v(best)) best = k;
    }
    return best;
}

}  // namespace detail

/// MaxLin relaxation of max(x_1..x_n) over the box [l, u].
///
/// With i, j the indices of the largest and second-largest upper bounds
/// (smallest index on ties) and l_max the largest lower bound:
///  - upper, if l_i = l_max and l_i >= u_j: u(x) = x_i (x_i always wins);
///  - upper, otherwise: u(x) = (u_i - u_j) / (u_i - l_i) * (x_i - l_i) + u_j;
///  - lower: l(x) = x_k with k the argmax of the midpoints (u + l) / 2.
inline RelaxationRow maxlin_relax(const Vector& l, const Vector& u) {
    detail::check_window(l, u);
    const Eigen::Index n = l.size();
    if (n == 1) return detail::identity_window(1, 0);

    const Eigen::Index i = detail::argmax_skip(u, -1);
    const Eigen::Index j = detail::argmax_skip(u, i);
    const double l_max = l.maxCoeff();

    RelaxationRow r = detail::window_row(n);
    if (l(i) == l_max && l(i) >= u(j)) {
        r.upper_coeffs(i) = 1.0;
    } else if (u(i) == l(i)) {
        // unreachable for valid boxes: u_i = l_i forces the first case
        r.upper_offset = u(j);
    } else {
        const double a = (u(i) - u(j)) / (u(i) - l(i));
        r.upper_coeffs(i) = a;
        r.upper_offset = u(j) - a * l(i);
    }

    const Vector mid = (u + l) / 2.0;
    r.lower_coeffs(detail::argmax_skip(mid, -1)) = 1.0;
    return r;
}

/// Baseline: exact pass-through when one input dominates the rest, otherwise
/// the constant max_k u_k above and the input with the largest lower bound below.
inline RelaxationRow deeppoly_style_relax(const Vector& l, const Vector& u) {
    detail::check_window(l, u);
    const Eigen::Index n = l.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        bool dominates = true;
        for (Eigen::Index k = 0; k < n && dominates; ++k) {
            if (k != i && l(i) < u(k)) dominates = false;
        }
        if (dominates) return detail::identity_window(n, i);
    }
    RelaxationRow r = detail::window_row(n);
    r.upper_offset = u.maxCoeff();
    r.lower_coeffs(detail::argmax_skip(l, -1)) = 1.0;
    return r;
}

/// Baseline: constant bounds [max_k l_k, max_k u_k].
inline RelaxationRow interval_constant_relax(const Vector& l, const Vector& u) {
    detail::check_window(l, u);
    RelaxationRow r = detail::window_row(l.size());
    r.upper_offset = u.maxCoeff();
    r.lower_offset = l.maxCoeff();
    return r;
}

/// Relaxation of one window under `rule`. A window with a single input is the
/// identity for every rule.
inline RelaxationRow relax_pool(PoolRule rule, const Vector& l, const Vector& u) {
    if (l.size() == 1 && u.size() == 1) {
        detail::check_window(l, u);
        return detail::identity_window(1, 0);
    }
    switch (rule) {
    case PoolRule::MaxLin: return maxlin_relax(l, u);
    case PoolRule::DeepPolyStyle: return deeppoly_style_relax(l, u);
    case PoolRule::IntervalConstant: return interval_constant_relax(l, u);
    }
    throw DomainError("unknown max-pool rule");
}

inline constexpr std::size_t kMaxSoundnessCheckArity = 12;

/// Minimum over the 2^n box vertices of upper(v) - max(v). upper - max is
/// concave, so this is its minimum over the whole box; a sound upper bound
/// gives a value >= 0 up to roundoff.
inline double relax_soundness_check(PoolRule rule, const Vector& l, const Vector& u) {
    detail::check_window(l, u);
    const auto n = static_cast<std::size_t>(l.size());
    if (n > kMaxSoundnessCheckArity)
        throw DomainError("relax_soundness_check enumerates 2^n vertices; n=" + std::to_string(n) + " exceeds 12");
    const RelaxationRow row = relax_pool(rule, l, u);
    double worst = std::numeric_limits<double>::infinity();
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        for (std::size_t k = 0; k < n; ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            v(e) = (mask >> k) & 1U ? u(e) : l(e);
        }
        worst = std::min(worst, row.eval_upper(v) - v.maxCoeff());
    }
    return worst;
}

}  // namespace maxlin

#endif  // MAXLIN_MAXPOOL_RELAX_HPP
