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

#ifndef MAXLIN_BOUNDS_HPP
#define MAXLIN_BOUNDS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "maxlin/error.hpp"
#include "maxlin/model.hpp"

namespace maxlin {

/// Elementwise box [lower, upper] over one layer's activations.
struct IntervalBounds {
    Vector lower;
    Vector upper;

    std::size_t size() const noexcept { return static_cast<std::size_t>(lower.size()); }
    Vector width() const { return upper - lower; }
    Vector midpoint() const { return (upper + lower) / 2.0; }

    bool contains(const Vector& x, double tol = 0.0) const {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) < lower(i) - tol || x(i) > upper(i) + tol) return false;
        }
        return true;
    }

    bool has_nan() const { return lower.hasNaN() || upper.hasNaN(); }

    /// Throws unless both vectors have the same length and lower <= upper.
    void check() const {
        if (lower.size() != upper.size()) throw DomainError("interval bounds: length mismatch");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!(lower(i) <= upper(i))) {
                throw DomainError("interval bounds: lower > upper at index " + std::to_string(i));
            }
        }
    }
};

/// Linear lower/upper bounds of one neuron over its fan-in:
///   lower_coeffs . x[fan_in] + lower_offset <= f(x) <= upper_coeffs . x[fan_in] + upper_offset
/// Offsets are absolute (any shift by the window's lower corner is already folded in).
struct RelaxationRow {
    std::vector<std::size_t> fan_in;
    Vector lower_coeffs;
    double lower_offset = 0.0;
    Vector upper_coeffs;
    double upper_offset = 0.0;

    std::size_t arity() const noexcept { return fan_in.size(); }

    /// Evaluates the bounds at a point given in fan-in coordinates.
    double eval_lower(const Vector& local) const { return lower_coeffs.dot(local) + lower_offset; }
    double eval_upper(const Vector& local) const { return upper_coeffs.dot(local) + upper_offset; }

    /// Single-input row, as used by elementwise activations.
    static RelaxationRow scalar(std::size_t index, double lower_slope, double lower_offset, double upper_slope,
                                double upper_offset) {
        RelaxationRow r;
        r.fan_in = {index};
        r.lower_coeffs = Vector::Constant(1, lower_slope);
        r.lower_offset = lower_offset;
        r.upper_coeffs = Vector::Constant(1, upper_slope);
        r.upper_offset = upper_offset;
        return r;
    }
};

/// Linear bounds of a layer's outputs in terms of the network input:
///   A_lower x + B_lower <= F^k(x) <= A_upper x + B_upper.
struct GlobalLinearBounds {
    Matrix A_lower;
    Vector B_lower;
    Matrix A_upper;
    Vector B_upper;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(A_upper.rows()); }
};

/// Dual norm of a vector: sum |v| (q=1), Euclidean (q=2), max |v| (q=inf).
template <class Derived>
double dual_norm(const Eigen::MatrixBase<Derived>& v, Norm q) {
    if (v.size() == 0) return 0.0;
    switch (q) {
    case Norm::L1: return v.template lpNorm<1>();
    case Norm::L2: return v.norm();
    case Norm::Linf: return v.template lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

inline Norm dual_of(Norm p) {
    switch (p) {
    case Norm::L1: return Norm::Linf;
    case Norm::L2: return Norm::L2;
    case Norm::Linf: return Norm::L1;
    }
    return Norm::L1;
}

/// The l_p ball B_p(center, radius). The dual exponent q is fixed here and
/// cannot be set independently.
class PerturbationSpec {
public:
    PerturbationSpec(Vector center, double radius, Norm p)
        : center_(std::move(center)), radius_(radius), p_(p), q_(dual_of(p)) {
        if (!(radius >= 0.0) || !std::isfinite(radius)) throw DomainError("perturbation radius must be finite and >= 0");
    }

    const Vector& center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }
    Norm norm() const noexcept { return p_; }
    Norm dual() const noexcept { return q_; }

private:
    Vector center_;
    double radius_;
    Norm p_;
    Norm q_;
};

/// Interval of each bounded output over the ball, by Hoelder's inequality:
///   upper_i =  eps ||A_upper,i||_q + A_upper,i x0 + B_upper,i
///   lower_i = -eps ||A_lower,i||_q + A_lower,i x0 + B_lower,i
inline IntervalBounds concretize(const GlobalLinearBounds& g, const PerturbationSpec& spec) {
    const auto n0 = spec.center().size();
    if (g.A_upper.cols() != n0 || g.A_lower.cols() != n0)
        throw DomainError("concretize: bound matrices have " + std::to_string(g.A_upper.cols()) +
                          " columns, center has " + std::to_string(n0) + " entries");
    if (g.A_lower.rows() != g.A_upper.rows() || g.B_lower.size() != g.A_lower.rows() ||
        g.B_upper.size() != g.A_upper.rows())
        throw DomainError("concretize: inconsistent row counts");

    const double eps = spec.radius();
    const Norm q = spec.dual();
    IntervalBounds out{g.A_lower * spec.center() + g.B_lower, g.A_upper * spec.center() + g.B_upper};
    if (eps > 0.0) {
        for (Eigen::Index i = 0; i < out.upper.size(); ++i) {
            out.upper(i) += eps * dual_norm(g.A_upper.row(i), q);
            out.lower(i) -= eps * dual_norm(g.A_lower.row(i), q);
        }
    }
    return out;
}

}  // namespace maxlin

#endif  // MAXLIN_BOUNDS_HPP
