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

#ifndef MAXLIN_MODEL_HPP
#define MAXLIN_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "maxlin/error.hpp"

namespace maxlin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tensor shape of a layer's input or output: either a flat vector `[n]` or an
/// image `[h, w, c]`. Images are stored channel-last, flat index
/// `(y * w + x) * c + channel`.
class Shape {
public:
    Shape() = default;

    static Shape vector(std::size_t n) { return Shape({n}); }
    static Shape image(std::size_t h, std::size_t w, std::size_t c) { return Shape({h, w, c}); }

    static Shape from_dims(const std::vector<std::size_t>& dims) {
        if (dims.size() != 1 && dims.size() != 3) {
            throw DomainError("shape must have rank 1 or 3, got rank " + std::to_string(dims.size()));
        }
        for (auto d : dims) {
            if (d == 0) throw DomainError("shape dimensions must be positive");
        }
        return Shape(dims);
    }

    bool is_image() const noexcept { return dims_.size() == 3; }
    std::size_t height() const noexcept { return is_image() ? dims_[0] : 1; }
    std::size_t width() const noexcept { return is_image() ? dims_[1] : 1; }
    std::size_t channels() const noexcept { return is_image() ? dims_[2] : size(); }

    std::size_t size() const noexcept {
        std::size_t n = dims_.empty() ? 0 : 1;
        for (auto d : dims_) n *= d;
        return n;
    }

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }

    std::size_t index(std::size_t y, std::size_t x, std::size_t c) const noexcept {
        return (y * width() + x) * channels() + c;
    }

    std::string str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(dims_[i]);
        }
        return s + "]";
    }

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

    std::vector<std::size_t> dims_;
};

/// l_p norm of the perturbation ball.
enum class Norm { L1, L2, Linf };

inline std::string_view to_string(Norm p) {
    switch (p) {
    case Norm::L1: return "1";
    case Norm::L2: return "2";
    case Norm::Linf: return "inf";
    }
    return "?";
}

inline Norm parse_norm(std::string_view s) {
    if (s == "1") return Norm::L1;
    if (s == "2") return Norm::L2;
    if (s == "inf" || s == "Inf" || s == "INF") return Norm::Linf;
    throw DomainError("unknown norm '" + std::string(s) + "' (expected 1, 2 or inf)");
}

enum class ActivationKind { ReLU, AdaptiveReLU, Sigmoid, Tanh, Arctan };

inline std::string_view to_string(ActivationKind kind) {
    switch (kind) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::AdaptiveReLU: return "adaptive_relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Arctan: return "arctan";
    }
    return "?";
}

inline ActivationKind parse_activation(std::string_view s) {
    if (s == "relu") return ActivationKind::ReLU;
    if (s == "adaptive_relu") return ActivationKind::AdaptiveReLU;
    if (s == "sigmoid") return ActivationKind::Sigmoid;
    if (s == "tanh") return ActivationKind::Tanh;
    if (s == "arctan" || s == "atan") return ActivationKind::Arctan;
    throw UnsupportedLayerError("unsupported activation '" + std::string(s) + "'");
}

inline bool is_sshaped(ActivationKind kind) {
    return kind == ActivationKind::Sigmoid || kind == ActivationKind::Tanh ||
           kind == ActivationKind::Arctan;
}

/// Scalar activation function. `slope` is only used by AdaptiveReLU, whose
/// exact semantics are those of ReLU (the slope parameterizes its lower bound).
inline double apply_activation(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::ReLU:
    case ActivationKind::AdaptiveReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::Arctan: return std::atan(x);
    }
    return x;
}

/// Dense fully-connected layer, y = W x + b. Input shape is `[cols(W)]`.
struct AffineLayer {
    Matrix weight;
    Vector bias;
};

/// 2-D convolution over a channel-last image. Filters are stored
/// out_channels x in_channels x kernel_h x kernel_w, row-major. Padding is
/// zero-valued and symmetric.
struct Conv2DLayer {
    Shape input_shape;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::vector<double> filters;
    Vector bias;

    double filter(std::size_t oc, std::size_t ic, std::size_t ky, std::size_t kx) const {
        return filters[((oc * input_shape.channels() + ic) * kernel_h + ky) * kernel_w + kx];
    }
};

/// Reshape of an image into a vector. Channel-last storage makes this the
/// identity on flat indices.
struct FlattenLayer {
    Shape input_shape;
};

struct ActivationLayer {
    ActivationKind kind = ActivationKind::ReLU;
    /// Lower-bound slope for AdaptiveReLU, in [0, 1].
    double slope = 0.0;
    Shape input_shape;
};

/// Per-channel max pooling. Padded cells never enter a window; windows that
/// hang over the border only contain their in-range cells.
struct MaxPoolLayer {
    Shape input_shape;
    std::size_t pool_h = 2;
    std::size_t pool_w = 2;
    std::size_t stride = 2;
    std::size_t padding = 0;
};

using Layer = std::variant<AffineLayer, Conv2DLayer, FlattenLayer, ActivationLayer, MaxPoolLayer>;

/// Dense affine map equivalent to a linear layer.
struct AffineMap {
    Matrix weight;
    Vector bias;
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::size_t window_output_dim(std::size_t in, std::size_t pad, std::size_t window,
                                     std::size_t stride) {
    if (in + 2 * pad < window || stride == 0) return 0;
    return (in + 2 * pad - window) / stride + 1;
}

}  // namespace detail

inline std::string_view kind_name(const Layer& layer) {
    return std::visit(detail::overloaded{
                          [](const AffineLayer&) { return std::string_view("affine"); },
                          [](const Conv2DLayer&) { return std::string_view("conv2d"); },
                          [](const FlattenLayer&) { return std::string_view("flatten"); },
                          [](const ActivationLayer&) { return std::string_view("activation"); },
                          [](const MaxPoolLayer&) { return std::string_view("maxpool"); },
                      },
                      layer);
}

inline bool is_linear(const Layer& layer) {
    return std::holds_alternative<AffineLayer>(layer) || std::holds_alternative<Conv2DLayer>(layer) ||
           std::holds_alternative<FlattenLayer>(layer);
}

inline Shape input_shape(const Layer& layer) {
    return std::visit(detail::overloaded{
                          [](const AffineLayer& l) { return Shape::vector(static_cast<std::size_t>(l.weight.cols())); },
                          [](const auto& l) { return l.input_shape; },
                      },
                      layer);
}

inline Shape output_shape(const Layer& layer) {
    return std::visit(
        detail::overloaded{
            [](const AffineLayer& l) { return Shape::vector(static_cast<std::size_t>(l.weight.rows())); },
            [](const Conv2DLayer& l) {
                auto oh = detail::window_output_dim(l.input_shape.height(), l.padding, l.kernel_h, l.stride);
                auto ow = detail::window_output_dim(l.input_shape.width(), l.padding, l.kernel_w, l.stride);
                return Shape::image(oh, ow, l.out_channels);
            },
            [](const FlattenLayer& l) { return Shape::vector(l.input_shape.size()); },
            [](const ActivationLayer& l) { return l.input_shape; },
            [](const MaxPoolLayer& l) {
                auto oh = detail::window_output_dim(l.input_shape.height(), l.padding, l.pool_h, l.stride);
                auto ow = detail::window_output_dim(l.input_shape.width(), l.padding, l.pool_w, l.stride);
                return Shape::image(oh, ow, l.input_shape.channels());
            },
        },
        layer);
}

/// Dense affine map of a linear layer. Row i holds exactly the fan-in weights
/// of output neuron i; every other entry is zero. Convolutions are unrolled
/// over all output positions.
inline AffineMap materialize_affine(const Layer& layer) {
    return std::visit(
        detail::overloaded{
            [](const AffineLayer& l) { return AffineMap{l.weight, l.bias}; },
            [&](const Conv2DLayer& l) {
                const Shape in = l.input_shape;
                const Shape out = output_shape(layer);
                AffineMap map{Matrix::Zero(static_cast<Eigen::Index>(out.size()),
                                           static_cast<Eigen::Index>(in.size())),
                              Vector(static_cast<Eigen::Index>(out.size()))};
                for (std::size_t oy = 0; oy < out.height(); ++oy) {
                    for (std::size_t ox = 0; ox < out.width(); ++ox) {
                        for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
                            const auto row = static_cast<Eigen::Index>(out.index(oy, ox, oc));
                            map.bias(row) = l.bias(static_cast<Eigen::Index>(oc));
                            for (std::size_t ky = 0; ky < l.kernel_h; ++ky) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) -
                                                static_cast<std::ptrdiff_t>(l.padding);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height())) continue;
                                for (std::size_t kx = 0; kx < l.kernel_w; ++kx) {
                                    const auto ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) -
                                                    static_cast<std::ptrdiff_t>(l.padding);
                                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width())) continue;
                                    for (std::size_t ic = 0; ic < in.channels(); ++ic) {
                                        const auto col = static_cast<Eigen::Index>(
                                            in.index(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ic));
                                        map.weight(row, col) += l.filter(oc, ic, ky, kx);
                                    }
                                }
                            }
                        }
                    }
                }
                return map;
            },
            [](const FlattenLayer& l) {
                const auto n = static_cast<Eigen::Index>(l.input_shape.size());
                return AffineMap{Matrix::Identity(n, n), Vector::Zero(n)};
            },
            [](const auto&) -> AffineMap {
                throw DomainError("materialize_affine: layer is not linear");
            },
        },
        layer);
}

/// Flat input indices pooled by each output neuron, in output order. Each
/// list is ordered row-major over the window.
inline std::vector<std::vector<std::size_t>> pool_index_sets(const MaxPoolLayer& layer) {
    const Shape in = layer.input_shape;
    const Shape out = output_shape(Layer{layer});
    std::vector<std::vector<std::size_t>> sets(out.size());
    for (std::size_t oy = 0; oy < out.height(); ++oy) {
        for (std::size_t ox = 0; ox < out.width(); ++ox) {
            for (std::size_t c = 0; c < in.channels(); ++c) {
                auto& set = sets[out.index(oy, ox, c)];
                for (std::size_t py = 0; py < layer.pool_h; ++py) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * layer.stride + py) -
                                    static_cast<std::ptrdiff_t>(layer.padding);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height())) continue;
                    for (std::size_t px = 0; px < layer.pool_w; ++px) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * layer.stride + px) -
                                        static_cast<std::ptrdiff_t>(layer.padding);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width())) continue;
                        set.push_back(in.index(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), c));
                    }
                }
            }
        }
    }
    return sets;
}

/// Index of the largest entry; ties resolve to the smallest index.
inline std::size_t argmax(const Vector& v) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
    }
    return best;
}

/// Feed-forward classifier F = f^K o ... o f^1. Immutable once built; the
/// constructor validates every shape and caches the dense form of each
/// affine/conv layer and the window sets of each max-pool layer.
/// A rank-1 shape may feed a layer declaring an [h,w,c] input of the same
/// size, and the other way round; the flat HWC storage is unchanged.
class Network {
public:
    Network(std::string name, Shape input_shape, std::vector<Layer> layers, std::size_t num_classes)
        : name_(std::move(name)), input_shape_(std::move(input_shape)), layers_(std::move(layers)),
          num_classes_(num_classes) {
        validate();
        affine_.resize(layers_.size());
        windows_.resize(layers_.size());
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            if (std::holds_alternative<AffineLayer>(layers_[k]) || std::holds_alternative<Conv2DLayer>(layers_[k])) {
                affine_[k] = materialize_affine(layers_[k]);
            } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layers_[k])) {
                windows_[k] = pool_index_sets(*pool);
            }
        }
    }

    const std::string& name() const noexcept { return name_; }
    const Shape& input_shape() const noexcept { return input_shape_; }
    std::size_t input_size() const noexcept { return input_shape_.size(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    /// Number of layers K.
    std::size_t depth() const noexcept { return layers_.size(); }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const Layer& layer(std::size_t k) const { return layers_.at(k); }

    std::size_t layer_size(std::size_t k) const { return output_shape(layers_.at(k)).size(); }

    /// Cached dense map of affine/conv layer k (0-based); empty for others.
    const std::optional<AffineMap>& affine(std::size_t k) const { return affine_.at(k); }
    const std::vector<std::vector<std::size_t>>& pool_windows(std::size_t k) const { return windows_.at(k); }

    /// Output of every layer at input x (entry k is the output of layer k).
    std::vector<Vector> forward_all(const Vector& x) const {
        if (static_cast<std::size_t>(x.size()) != input_size()) {
            throw DomainError("input has " + std::to_string(x.size()) + " entries, network expects " +
                              std::to_string(input_size()));
        }
        std::vector<Vector> outs;
        outs.reserve(layers_.size());
        const Vector* cur = &x;
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            outs.push_back(apply_layer(k, *cur));
            cur = &outs.back();
        }
        return outs;
    }

    Vector forward(const Vector& x) const { return forward_all(x).back(); }

    std::size_t predict(const Vector& x) const { return argmax(forward(x)); }

private:
    Vector apply_layer(std::size_t k, const Vector& in) const {
        const Layer& layer = layers_[k];
        if (affine_[k]) return affine_[k]->weight * in + affine_[k]->bias;
        if (std::holds_alternative<FlattenLayer>(layer)) return in;
        if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
            return in.unaryExpr([kind = act->kind](double v) { return apply_activation(kind, v); });
        }
        const auto& windows = windows_[k];
        Vector out(static_cast<Eigen::Index>(windows.size()));
        for (std::size_t o = 0; o < windows.size(); ++o) {
            double m = in(static_cast<Eigen::Index>(windows[o].front()));
            for (auto idx : windows[o]) m = std::max(m, in(static_cast<Eigen::Index>(idx)));
            out(static_cast<Eigen::Index>(o)) = m;
        }
        return out;
    }

    void validate() const {
        if (layers_.empty()) throw ShapeError(0, "network has no layers");
        if (input_shape_.size() == 0) throw ShapeError(0, "input shape is empty");
        Shape expected = input_shape_;
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const std::size_t id = k + 1;
            const Layer& layer = layers_[k];
            std::visit(detail::overloaded{
                           [&](const AffineLayer& l) {
                               if (l.weight.rows() == 0 || l.weight.cols() == 0)
                                   throw ShapeError(id, "affine weight matrix is empty");
                               if (l.bias.size() != l.weight.rows())
                                   throw ShapeError(id, "affine bias length differs from weight rows");
                           },
                           [&](const Conv2DLayer& l) {
                               if (!l.input_shape.is_image()) throw ShapeError(id, "conv2d needs an [h,w,c] input");
                               if (l.out_channels == 0 || l.kernel_h == 0 || l.kernel_w == 0 || l.stride == 0)
                                   throw ShapeError(id, "conv2d has a zero-sized kernel, channel count or stride");
                               if (l.filters.size() !=
                                   l.out_channels * l.input_shape.channels() * l.kernel_h * l.kernel_w)
                                   throw ShapeError(id, "conv2d filter tensor has the wrong number of entries");
                               if (static_cast<std::size_t>(l.bias.size()) != l.out_channels)
                                   throw ShapeError(id, "conv2d bias length differs from out_channels");
                               if (output_shape(layer).size() == 0)
                                   throw ShapeError(id, "conv2d kernel does not fit the padded input");
                           },
                           [&](const FlattenLayer&) {},
                           [&](const ActivationLayer& l) {
                               if (l.kind == ActivationKind::AdaptiveReLU && !(l.slope >= 0.0 && l.slope <= 1.0))
                                   throw ShapeError(id, "adaptive_relu slope must lie in [0,1]");
                           },
                           [&](const MaxPoolLayer& l) {
                               if (!l.input_shape.is_image()) throw ShapeError(id, "maxpool needs an [h,w,c] input");
                               if (l.pool_h == 0 || l.pool_w == 0 || l.stride == 0)
                                   throw ShapeError(id, "maxpool has a zero-sized window or stride");
                               if (l.padding >= l.pool_h || l.padding >= l.pool_w)
                                   throw ShapeError(id, "maxpool padding must be smaller than the window");
                               if (output_shape(layer).size() == 0)
                                   throw ShapeError(id, "maxpool window does not fit the padded input");
                           },
                       },
                       layer);
            const Shape in = maxlin::input_shape(layer);
            const bool reshaped = in.size() == expected.size() && (!in.is_image() || !expected.is_image());
            if (!(in == expected) && !reshaped) {
                throw ShapeError(id, "input shape " + in.str() + " does not match the previous output shape " +
                                         expected.str());
            }
            expected = output_shape(layer);
        }
        if (!std::holds_alternative<AffineLayer>(layers_.back()))
            throw ShapeError(layers_.size(), "the last layer must be affine (logit layer)");
        if (expected.size() != num_classes_)
            throw ShapeError(layers_.size(), "logit layer has " + std::to_string(expected.size()) +
                                                 " outputs but num_classes is " + std::to_string(num_classes_));
    }

    std::string name_;
    Shape input_shape_;
    std::vector<Layer> layers_;
    std::size_t num_classes_;
    std::vector<std::optional<AffineMap>> affine_;
    std::vector<std::vector<std::vector<std::size_t>>> windows_;
};

/// One robustness question: is the label of x0 stable over the l_p ball?
struct VerificationQuery {
    Vector x0;
    std::size_t label = 0;
    Norm norm = Norm::Linf;
    /// Fixed radius; absent means "search for the largest certifiable one".
    std::optional<double> eps;
};

inline void validate_query(const Network& net, const VerificationQuery& q) {
    if (static_cast<std::size_t>(q.x0.size()) != net.input_size())
        throw DomainError("query input has " + std::to_string(q.x0.size()) + " entries, network expects " +
                          std::to_string(net.input_size()));
    if (q.label >= net.num_classes())
        throw DomainError("label " + std::to_string(q.label) + " out of range for " +
                          std::to_string(net.num_classes()) + " classes");
    if (q.eps && !(*q.eps >= 0.0)) throw DomainError("eps must be non-negative");
}

}  // namespace maxlin

#endif  // MAXLIN_MODEL_HPP
