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

#ifndef MAXLIN_RANDOM_NETWORK_HPP
#define MAXLIN_RANDOM_NETWORK_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "maxlin/model.hpp"

namespace maxlin {

/// Small random conv/max-pool classifiers used by the soundness and
/// tightness suites.
struct RandomNetworkOptions {
    /// Number of weighted (conv + affine) layers, 2 to 4.
    std::size_t weight_layers = 3;
    ActivationKind activation = ActivationKind::ReLU;
    std::size_t num_classes = 3;
    std::uint64_t seed = 0;
};

namespace detail {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double gain) {
    std::normal_distribution<double> g(0.0, gain / std::sqrt(static_cast<double>(cols)));
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

inline Vector random_bias(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 0.1);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
    return v;
}

}  // namespace detail

/// conv2d -> activation -> maxpool -> flatten -> [affine -> activation]* -> affine.
/// Every layer has at most 32 neurons.
inline Network random_network(const RandomNetworkOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t side = pick(4, 5);
    const Shape input = Shape::image(side, side, 1);

    Conv2DLayer conv;
    conv.input_shape = input;
    conv.kernel_h = conv.kernel_w = 2;
    conv.out_channels = pick(1, 2);
    conv.stride = 1;
    const Matrix filters = detail::random_matrix(conv.out_channels, 4, rng, 1.5);
    conv.filters.assign(filters.data(), filters.data() + filters.size());
    conv.bias = detail::random_bias(conv.out_channels, rng);

    std::vector<Layer> layers;
    layers.push_back(conv);
    Shape cur = output_shape(layers.back());
    layers.push_back(ActivationLayer{opt.activation, 0.5, cur});

    MaxPoolLayer pool;
    pool.input_shape = cur;
    pool.pool_h = pool.pool_w = 2;
    pool.stride = pick(1, 2);
    layers.push_back(pool);
    cur = output_shape(layers.back());
    layers.push_back(FlattenLayer{cur});
    std::size_t width = cur.size();

    const std::size_t hidden = opt.weight_layers < 2 ? 0 : opt.weight_layers - 2;
    for (std::size_t h = 0; h < hidden; ++h) {
        const std::size_t next = pick(6, 16);
        layers.push_back(AffineLayer{detail::random_matrix(next, width, rng, 1.5), detail::random_bias(next, rng)});
        layers.push_back(ActivationLayer{opt.activation, 0.5, Shape::vector(next)});
        width = next;
    }
    layers.push_back(
        AffineLayer{detail::random_matrix(opt.num_classes, width, rng, 1.5), detail::random_bias(opt.num_classes, rng)});
    return Network("random-" + std::to_string(opt.seed), input, std::move(layers), opt.num_classes);
}

/// `count` networks cycling through ReLU, sigmoid and tanh and through 2, 3
/// and 4 weighted layers.
inline std::vector<Network> random_network_suite(std::size_t count, std::uint64_t seed) {
    static constexpr ActivationKind kinds[] = {ActivationKind::ReLU, ActivationKind::Sigmoid, ActivationKind::Tanh};
    std::vector<Network> nets;
    nets.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        RandomNetworkOptions opt;
        opt.activation = kinds[i % 3];
        opt.weight_layers = 2 + (i / 3) % 3;
        opt.seed = seed + i;
        nets.push_back(random_network(opt));
    }
    return nets;
}

/// Query at a uniform point of [0, 1]^n, labeled with the network's own prediction.
inline VerificationQuery random_query(const Network& net, Norm norm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VerificationQuery q;
    q.x0.resize(static_cast<Eigen::Index>(net.input_size()));
    for (Eigen::Index i = 0; i < q.x0.size(); ++i) q.x0(i) = unit(rng);
    q.label = net.predict(q.x0);
    q.norm = norm;
    return q;
}

/// Fully connected ReLU stack with `depth` affine layers of `width` neurons
/// (the last one maps to `num_classes`), for timing the analyzer.
inline Network deep_network(std::size_t depth, std::size_t width, std::size_t num_classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    for (std::size_t d = 0; d + 1 < depth; ++d) {
        layers.push_back(AffineLayer{detail::random_matrix(width, width, rng, 1.0), detail::random_bias(width, rng)});
        layers.push_back(ActivationLayer{ActivationKind::ReLU, 0.0, Shape::vector(width)});
    }
    layers.push_back(AffineLayer{detail::random_matrix(num_classes, width, rng, 1.0), detail::random_bias(num_classes, rng)});
    return Network("deep-" + std::to_string(depth), Shape::vector(width), std::move(layers), num_classes);
}

}  // namespace maxlin

#endif  // MAXLIN_RANDOM_NETWORK_HPP
