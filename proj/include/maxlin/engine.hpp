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

#ifndef MAXLIN_ENGINE_HPP
#define MAXLIN_ENGINE_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "maxlin/activation_relax.hpp"
#include "maxlin/bounds.hpp"
#include "maxlin/error.hpp"
#include "maxlin/maxpool_relax.hpp"
#include "maxlin/model.hpp"

namespace maxlin {

/// Result of analyzing layer k (1-based): relaxation rows for activation and
/// max-pool layers (fan-in indices refer to layer k-1, or to the input when
/// k = 1) and the concretized interval of the layer's outputs. Linear layers
/// keep their dense map on the Network and carry no rows.
struct LayerAnalysis {
    std::size_t layer = 0;
    std::vector<RelaxationRow> relaxations;
    IntervalBounds bounds;
};

struct AnalysisOptions {
    /// Test hook: added to every concretized lower bound, which makes the
    /// analyzer unsound. Only for exercising the soundness checker.
    double unsafe_lower_slack = 0.0;
};

struct Analysis {
    std::vector<LayerAnalysis> layers;

    const IntervalBounds& output() const { return layers.back().bounds; }
};

enum class Verdict { Certified, Unknown };

inline std::string_view to_string(Verdict v) { return v == Verdict::Certified ? "certified" : "unknown"; }

struct RobustnessVerdict {
    Verdict verdict = Verdict::Unknown;
    IntervalBounds outputs;
    /// l_t - max_{j != t} u_j; +inf for a single-class network.
    double margin = 0.0;

    bool certified() const noexcept { return verdict == Verdict::Certified; }
};

namespace detail {

/// Linear expression C x + d over the outputs of some layer, one row per
/// bounded target neuron.
struct LinearExpr {
    Matrix coeffs;
    Vector offset;
};

/// Relaxation rows of one layer as dense matrices (activation layers are
/// diagonal and kept as vectors).
struct DenseRelaxation {
    bool diagonal = false;
    Matrix lower, upper;
    Vector lower_diag, upper_diag;
    Vector lower_offset, upper_offset;
};

inline DenseRelaxation densify(const std::vector<RelaxationRow>& rows, std::size_t in_size, bool diagonal) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    DenseRelaxation d;
    d.diagonal = diagonal;
    d.lower_offset.resize(n);
    d.upper_offset.resize(n);
    if (diagonal) {
        d.lower_diag.resize(n);
        d.upper_diag.resize(n);
    } else {
        d.lower = Matrix::Zero(n, static_cast<Eigen::Index>(in_size));
        d.upper = Matrix::Zero(n, static_cast<Eigen::Index>(in_size));
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const RelaxationRow& row = rows[static_cast<std::size_t>(r)];
        d.lower_offset(r) = row.lower_offset;
        d.upper_offset(r) = row.upper_offset;
        if (diagonal) {
            d.lower_diag(r) = row.lower_coeffs(0);
            d.upper_diag(r) = row.upper_coeffs(0);
            continue;
        }
        for (std::size_t k = 0; k < row.fan_in.size(); ++k) {
            const auto col = static_cast<Eigen::Index>(row.fan_in[k]);
            d.lower(r, col) += row.lower_coeffs(static_cast<Eigen::Index>(k));
            d.upper(r, col) += row.upper_coeffs(static_cast<Eigen::Index>(k));
        }
    }
    return d;
}

/// Substitutes relaxed neurons by their bounds. For an upper expression a
/// positive coefficient takes the neuron's upper row and a negative one its
/// lower row; `upper == false` swaps the roles. Zero coefficients drop out.
inline void substitute(LinearExpr& e, const DenseRelaxation& rel, bool upper) {
    const Matrix pos = e.coeffs.cwiseMax(0.0);
    const Matrix neg = e.coeffs.cwiseMin(0.0);
    const Vector& off_pos = upper ? rel.upper_offset : rel.lower_offset;
    const Vector& off_neg = upper ? rel.lower_offset : rel.upper_offset;
    e.offset += pos * off_pos + neg * off_neg;
    if (rel.diagonal) {
        const Vector& d_pos = upper ? rel.upper_diag : rel.lower_diag;
        const Vector& d_neg = upper ? rel.lower_diag : rel.upper_diag;
        e.coeffs = pos * d_pos.asDiagonal();
        e.coeffs += neg * d_neg.asDiagonal();
    } else {
        const Matrix& m_pos = upper ? rel.upper : rel.lower;
        const Matrix& m_neg = upper ? rel.lower : rel.upper;
        e.coeffs = pos * m_pos;
        e.coeffs.noalias() += neg * m_neg;
    }
}

inline void substitute_affine(LinearExpr& e, const AffineMap& map) {
    e.offset += e.coeffs * map.bias;
    e.coeffs = e.coeffs * map.weight;
}

inline std::size_t input_size_of(const Network& net, std::size_t k) {
    return k == 0 ? net.input_size() : net.layer_size(k - 1);
}

}  // namespace detail

/// Global linear bounds of layer k (1-based) in terms of the network input.
///
/// Starts from layer k's own linear form (its affine map, or its relaxation
/// rows) and substitutes backwards through layers k-1, ..., 1. `analyses[j-1]`
/// must describe layer j for j < k; when layer k is an activation or max-pool
/// layer, `analyses[k-1]` must also be present and carry its rows.
inline GlobalLinearBounds backsubstitute(const Network& net, std::span<const LayerAnalysis> analyses, std::size_t k) {
    if (k == 0 || k > net.depth()) throw DomainError("backsubstitute: layer index out of range");
    const bool target_linear = is_linear(net.layer(k - 1));
    if (analyses.size() < (target_linear ? k - 1 : k))
        throw DomainError("backsubstitute: missing analysis for a predecessor of layer " + std::to_string(k));

    // relaxation matrices of the nonlinear layers on the path
    std::vector<detail::DenseRelaxation> dense(k);
    for (std::size_t j = 1; j <= k; ++j) {
        const Layer& layer = net.layer(j - 1);
        if (is_linear(layer)) continue;
        const LayerAnalysis& a = analyses[j - 1];
        if (a.relaxations.size() != net.layer_size(j - 1))
            throw DomainError("backsubstitute: layer " + std::to_string(j) + " has no relaxation rows");
        dense[j - 1] = detail::densify(a.relaxations, detail::input_size_of(net, j - 1),
                                       std::holds_alternative<ActivationLayer>(layer));
    }

    const auto n = static_cast<Eigen::Index>(net.layer_size(k - 1));
    const auto n_in = static_cast<Eigen::Index>(detail::input_size_of(net, k - 1));
    detail::LinearExpr up, lo;
    const Layer& target = net.layer(k - 1);
    if (const auto& map = net.affine(k - 1)) {
        up = {map->weight, map->bias};
        lo = up;
    } else if (std::holds_alternative<FlattenLayer>(target)) {
        up = {Matrix::Identity(n, n_in), Vector::Zero(n)};
        lo = up;
    } else {
        const auto& rel = dense[k - 1];
        if (rel.diagonal) {
            up = {Matrix(rel.upper_diag.asDiagonal()), rel.upper_offset};
            lo = {Matrix(rel.lower_diag.asDiagonal()), rel.lower_offset};
        } else {
            up = {rel.upper, rel.upper_offset};
            lo = {rel.lower, rel.lower_offset};
        }
    }

    for (std::size_t j = k - 1; j >= 1; --j) {
        const Layer& layer = net.layer(j - 1);
        if (const auto& map = net.affine(j - 1)) {
            detail::substitute_affine(up, *map);
            detail::substitute_affine(lo, *map);
        } else if (!std::holds_alternative<FlattenLayer>(layer)) {
            detail::substitute(up, dense[j - 1], true);
            detail::substitute(lo, dense[j - 1], false);
        }
    }
    return GlobalLinearBounds{std::move(lo.coeffs), std::move(lo.offset), std::move(up.coeffs), std::move(up.offset)};
}

namespace detail {

inline std::vector<RelaxationRow> relax_layer(const Network& net, std::size_t k, const IntervalBounds& in,
                                              PoolRule rule) {
    const Layer& layer = net.layer(k - 1);
    std::vector<RelaxationRow> rows;
    if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
        rows.reserve(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            const auto e = static_cast<Eigen::Index>(i);
            rows.push_back(relax_activation(*act, in.lower(e), in.upper(e), i));
        }
        return rows;
    }
    const auto& windows = net.pool_windows(k - 1);
    rows.reserve(windows.size());
    for (const auto& window : windows) {
        Vector l(static_cast<Eigen::Index>(window.size())), u(static_cast<Eigen::Index>(window.size()));
        for (std::size_t p = 0; p < window.size(); ++p) {
            l(static_cast<Eigen::Index>(p)) = in.lower(static_cast<Eigen::Index>(window[p]));
            u(static_cast<Eigen::Index>(p)) = in.upper(static_cast<Eigen::Index>(window[p]));
        }
        RelaxationRow row = relax_pool(rule, l, u);
        for (auto& idx : row.fan_in) idx = window[idx];
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Roundoff can leave lower a few ulps above upper when both sides are
/// exact; collapse such entries to their midpoint.
inline void repair_crossed(IntervalBounds& b) {
    for (Eigen::Index i = 0; i < b.lower.size(); ++i) {
        if (b.lower(i) > b.upper(i)) b.lower(i) = b.upper(i) = 0.5 * (b.lower(i) + b.upper(i));
    }
}

}  // namespace detail

/// Layer-by-layer bound analysis over the ball `spec`. Every layer is
/// concretized from bounds backsubstituted all the way to the input; the
/// intervals of layer k-1 parameterize the relaxations of layer k.
inline Analysis analyze(const Network& net, const PerturbationSpec& spec, PoolRule rule,
                        const AnalysisOptions& options = {}) {
    if (static_cast<std::size_t>(spec.center().size()) != net.input_size())
        throw DomainError("analyze: center has " + std::to_string(spec.center().size()) +
                          " entries, network expects " + std::to_string(net.input_size()));

    // input box: every coordinate moves by at most eps under any l_p norm
    const IntervalBounds input{spec.center().array() - spec.radius(), spec.center().array() + spec.radius()};

    Analysis result;
    result.layers.reserve(net.depth());
    for (std::size_t k = 1; k <= net.depth(); ++k) {
        LayerAnalysis la;
        la.layer = k;
        if (!is_linear(net.layer(k - 1))) {
            const IntervalBounds& prev = k == 1 ? input : result.layers.back().bounds;
            la.relaxations = detail::relax_layer(net, k, prev, rule);
        }
        result.layers.push_back(std::move(la));
        const GlobalLinearBounds g = backsubstitute(net, result.layers, k);
        IntervalBounds b = concretize(g, spec);
        if (options.unsafe_lower_slack != 0.0) b.lower.array() += options.unsafe_lower_slack;
        if (b.has_nan()) throw NumericError("analyze: NaN in the bounds of layer " + std::to_string(k));
        detail::repair_crossed(b);
        result.layers.back().bounds = std::move(b);
    }
    return result;
}

/// Certified iff l_t >= u_j for every j != t.
inline RobustnessVerdict check_robust(const IntervalBounds& outputs, std::size_t label) {
    if (label >= outputs.size())
        throw DomainError("check_robust: label " + std::to_string(label) + " out of range");
    double worst_other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < outputs.size(); ++j) {
        if (j != label) worst_other = std::max(worst_other, outputs.upper(static_cast<Eigen::Index>(j)));
    }
    RobustnessVerdict v;
    v.outputs = outputs;
    v.margin = outputs.lower(static_cast<Eigen::Index>(label)) - worst_other;
    v.verdict = v.margin >= 0.0 ? Verdict::Certified : Verdict::Unknown;
    return v;
}

}  // namespace maxlin

#endif  // MAXLIN_ENGINE_HPP
