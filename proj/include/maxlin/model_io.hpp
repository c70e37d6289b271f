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

#ifndef MAXLIN_MODEL_IO_HPP
#define MAXLIN_MODEL_IO_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxlin/error.hpp"
#include "maxlin/model.hpp"

namespace maxlin {

using Json = nlohmann::json;

/// Model manifest format:
///
///   { "name": "...", "input_shape": [h, w, c] | [n], "num_classes": K,
///     "layers": [ {"kind": "affine", "in": 2, "out": 4, "weights": [...], "bias": [...]},
///                 {"kind": "conv2d", "input_shape": [h,w,c], "out_channels": 2,
///                  "kernel": [kh, kw], "stride": 1, "padding": 0, "weights": [...], "bias": [...]},
///                 {"kind": "batchnorm", "scale": [...], "shift": [...]},
///                 {"kind": "activation", "function": "relu|adaptive_relu|sigmoid|tanh|arctan", "slope": a},
///                 {"kind": "maxpool", "input_shape": [h,w,c], "pool": [ph, pw], "stride": s, "padding": p},
///                 {"kind": "flatten", "input_shape": [h,w,c]} ] }
///
/// Numeric arrays are either inline JSON or "@blob:OFFSET:LENGTH", a byte
/// range of raw little-endian float64 values in the sidecar file next to the
/// manifest (same stem, ".bin" extension). Weights are row-major; conv
/// filters are out_channels x in_channels x kh x kw. `input_shape` may be
/// omitted on every layer except where it cannot be inferred (it always can
/// after the first layer). BatchNorm is folded into the preceding affine or
/// conv2d layer at load time: w' = scale * w, b' = scale * b + shift, per
/// output channel.
class ModelReader {
public:
    explicit ModelReader(std::filesystem::path sidecar = {}) : sidecar_(std::move(sidecar)) {}

    Network parse(const Json& doc) {
        try {
            return parse_impl(doc);
        } catch (const Json::exception& e) {
            throw ParseError(std::string("model file: ") + e.what());
        }
    }

private:
    std::vector<double> numbers(const Json& node, const std::string& what) {
        if (node.is_string()) return blob(node.get<std::string>(), what);
        if (!node.is_array()) throw ParseError(what + ": expected an array or a blob reference");
        std::vector<double> out;
        flatten_into(node, out, what);
        return out;
    }

    static void flatten_into(const Json& node, std::vector<double>& out, const std::string& what) {
        for (const auto& v : node) {
            if (v.is_array()) {
                flatten_into(v, out, what);
            } else if (v.is_number()) {
                out.push_back(v.get<double>());
            } else {
                throw ParseError(what + ": non-numeric entry");
            }
        }
    }

    std::vector<double> blob(const std::string& ref, const std::string& what) {
        const std::string prefix = "@blob:";
        if (ref.rfind(prefix, 0) != 0) throw ParseError(what + ": string values must be @blob:offset:len references");
        std::uint64_t offset = 0, length = 0;
        char sep = 0;
        std::istringstream in(ref.substr(prefix.size()));
        if (!(in >> offset >> sep >> length) || sep != ':' || !in.eof())
            throw ParseError(what + ": malformed blob reference '" + ref + "'");
        if (length % sizeof(double) != 0)
            throw ParseError(what + ": blob length must be a multiple of 8 bytes");
        load_sidecar();
        if (offset + length > data_.size())
            throw ParseError(what + ": blob range exceeds sidecar size " + std::to_string(data_.size()));
        std::vector<double> out(length / sizeof(double));
        for (std::size_t i = 0; i < out.size(); ++i) {
            std::uint64_t bits = 0;
            for (std::size_t b = 0; b < 8; ++b)
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[offset + i * 8 + b])) << (8 * b);
            std::memcpy(&out[i], &bits, sizeof bits);
        }
        return out;
    }

    void load_sidecar() {
        if (loaded_) return;
        if (sidecar_.empty()) throw ParseError("blob reference used but no sidecar file is associated with the model");
        std::ifstream f(sidecar_, std::ios::binary);
        if (!f) throw ParseError("cannot open sidecar " + sidecar_.string());
        data_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        loaded_ = true;
    }

    static std::vector<std::size_t> dims(const Json& node, const std::string& what) {
        if (!node.is_array()) throw ParseError(what + ": expected an array of dimensions");
        std::vector<std::size_t> out;
        for (const auto& v : node) {
            if (!v.is_number_integer() || v.get<long long>() <= 0)
                throw ParseError(what + ": dimensions must be positive integers");
            out.push_back(v.get<std::size_t>());
        }
        return out;
    }

    static Shape shape(const Json& node, const std::string& what) {
        try {
            return Shape::from_dims(dims(node, what));
        } catch (const DomainError& e) {
            throw ParseError(what + ": " + e.what());
        }
    }

    static std::size_t count(const Json& layer, const char* key, std::size_t fallback, const std::string& what) {
        if (!layer.contains(key)) return fallback;
        const auto& v = layer.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ParseError(what + ": '" + key + "' must be a non-negative integer");
        return v.get<std::size_t>();
    }

    static std::pair<std::size_t, std::size_t> pair_of(const Json& layer, const char* key, const std::string& what) {
        const auto d = dims(layer.at(key), what);
        if (d.size() == 1) return {d[0], d[0]};
        if (d.size() != 2) throw ParseError(what + ": '" + key + "' needs one or two entries");
        return {d[0], d[1]};
    }

    static Vector to_vector(const std::vector<double>& v) {
        return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Layer parse_affine(const Json& j, const std::string& what) {
        auto w = numbers(j.at("weights"), what + " weights");
        std::size_t rows = 0, cols = 0;
        if (j.contains("out") && j.contains("in")) {
            rows = count(j, "out", 0, what);
            cols = count(j, "in", 0, what);
        } else if (j.at("weights").is_array() && !j.at("weights").empty() && j.at("weights")[0].is_array()) {
            rows = j.at("weights").size();
            cols = j.at("weights")[0].size();
        } else {
            throw ParseError(what + ": flat affine weights need 'in' and 'out'");
        }
        if (w.size() != rows * cols)
            throw ParseError(what + ": expected " + std::to_string(rows * cols) + " weights, got " + std::to_string(w.size()));
        AffineLayer a;
        a.weight = Eigen::Map<const Matrix>(w.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        a.bias = j.contains("bias") ? to_vector(numbers(j.at("bias"), what + " bias"))
                                    : Vector::Zero(static_cast<Eigen::Index>(rows));
        return a;
    }

    Layer parse_conv(const Json& j, const Shape& prev, const std::string& what) {
        Conv2DLayer c;
        c.input_shape = j.contains("input_shape") ? shape(j.at("input_shape"), what + " input_shape") : prev;
        c.out_channels = count(j, "out_channels", 0, what);
        std::tie(c.kernel_h, c.kernel_w) = pair_of(j, "kernel", what);
        c.stride = count(j, "stride", 1, what);
        c.padding = count(j, "padding", 0, what);
        c.filters = numbers(j.at("weights"), what + " weights");
        c.bias = j.contains("bias") ? to_vector(numbers(j.at("bias"), what + " bias"))
                                    : Vector::Zero(static_cast<Eigen::Index>(c.out_channels));
        return c;
    }

    Layer parse_maxpool(const Json& j, const Shape& prev, const std::string& what) {
        MaxPoolLayer p;
        p.input_shape = j.contains("input_shape") ? shape(j.at("input_shape"), what + " input_shape") : prev;
        std::tie(p.pool_h, p.pool_w) = pair_of(j, "pool", what);
        p.stride = count(j, "stride", p.pool_h, what);
        p.padding = count(j, "padding", 0, what);
        return p;
    }

    static void fold_batchnorm(Layer& target, const std::vector<double>& scale, const std::vector<double>& shift,
                               const std::string& what) {
        if (scale.size() != shift.size()) throw ParseError(what + ": scale and shift lengths differ");
        if (auto* a = std::get_if<AffineLayer>(&target)) {
            if (scale.size() != static_cast<std::size_t>(a->weight.rows()))
                throw ParseError(what + ": expects one scale per affine output");
            for (Eigen::Index r = 0; r < a->weight.rows(); ++r) {
                const auto s = scale[static_cast<std::size_t>(r)];
                a->weight.row(r) *= s;
                a->bias(r) = s * a->bias(r) + shift[static_cast<std::size_t>(r)];
            }
            return;
        }
        if (auto* c = std::get_if<Conv2DLayer>(&target)) {
            if (scale.size() != c->out_channels) throw ParseError(what + ": expects one scale per conv output channel");
            const std::size_t per_channel = c->filters.size() / std::max<std::size_t>(1, c->out_channels);
            for (std::size_t oc = 0; oc < c->out_channels; ++oc) {
                for (std::size_t k = 0; k < per_channel; ++k) c->filters[oc * per_channel + k] *= scale[oc];
                const auto e = static_cast<Eigen::Index>(oc);
                c->bias(e) = scale[oc] * c->bias(e) + shift[oc];
            }
            return;
        }
        throw UnsupportedLayerError(what + ": batchnorm must follow an affine or conv2d layer");
    }

    Network parse_impl(const Json& doc) {
        if (!doc.is_object()) throw ParseError("model file: top level must be an object");
        const std::string name = doc.value("name", std::string{});
        const Shape input = shape(doc.at("input_shape"), "input_shape");
        const auto& layers_json = doc.at("layers");
        if (!layers_json.is_array()) throw ParseError("model file: 'layers' must be an array");

        std::vector<Layer> layers;
        Shape prev = input;
        std::size_t file_index = 0;
        for (const auto& j : layers_json) {
            ++file_index;
            const std::string what = "layer " + std::to_string(file_index);
            if (!j.is_object()) throw ParseError(what + ": expected an object");
            std::string kind = j.at("kind").get<std::string>();
            if (kind == "batchnorm") {
                if (layers.empty()) throw UnsupportedLayerError(what + ": batchnorm cannot be the first layer");
                fold_batchnorm(layers.back(), numbers(j.at("scale"), what + " scale"),
                               numbers(j.at("shift"), what + " shift"), what);
                continue;
            }
            Layer layer;
            if (kind == "affine" || kind == "dense" || kind == "linear") {
                layer = parse_affine(j, what);
            } else if (kind == "conv2d") {
                layer = parse_conv(j, prev, what);
            } else if (kind == "flatten") {
                layer = FlattenLayer{j.contains("input_shape") ? shape(j.at("input_shape"), what + " input_shape") : prev};
            } else if (kind == "maxpool") {
                layer = parse_maxpool(j, prev, what);
            } else if (kind == "activation" || kind == "relu" || kind == "adaptive_relu" || kind == "sigmoid" ||
                       kind == "tanh" || kind == "arctan") {
                ActivationLayer a;
                a.kind = parse_activation(kind == "activation" ? j.at("function").get<std::string>() : kind);
                a.slope = j.value("slope", 0.0);
                a.input_shape = j.contains("input_shape") ? shape(j.at("input_shape"), what + " input_shape") : prev;
                layer = a;
            } else {
                throw UnsupportedLayerError(what + ": unsupported layer kind '" + kind + "'");
            }
            prev = output_shape(layer);
            layers.push_back(std::move(layer));
        }
        if (!doc.contains("num_classes")) throw ParseError("model file: missing 'num_classes'");
        return Network(name, input, std::move(layers), doc.at("num_classes").get<std::size_t>());
    }

    std::filesystem::path sidecar_;
    std::string data_;
    bool loaded_ = false;
};

/// Sidecar location of a manifest: same path with the extension replaced by ".bin".
inline std::filesystem::path sidecar_path(const std::filesystem::path& model) {
    auto p = model;
    p.replace_extension(".bin");
    return p;
}

inline Network parse_model(const std::string& text, const std::filesystem::path& sidecar = {}) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    return ModelReader(sidecar).parse(doc);
}

inline Network load_model(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open model file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_model(ss.str(), sidecar_path(path));
}

namespace detail {

inline Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace detail

/// Manifest with every array inline.
inline Json model_to_json(const Network& net) {
    Json doc;
    doc["name"] = net.name();
    doc["input_shape"] = net.input_shape().dims();
    doc["num_classes"] = net.num_classes();
    Json layers = Json::array();
    for (const Layer& layer : net.layers()) {
        Json j;
        std::visit(detail::overloaded{
                       [&](const AffineLayer& a) {
                           j["kind"] = "affine";
                           j["out"] = a.weight.rows();
                           j["in"] = a.weight.cols();
                           j["weights"] = std::vector<double>(a.weight.data(), a.weight.data() + a.weight.size());
                           j["bias"] = detail::vector_json(a.bias);
                       },
                       [&](const Conv2DLayer& c) {
                           j["kind"] = "conv2d";
                           j["input_shape"] = c.input_shape.dims();
                           j["out_channels"] = c.out_channels;
                           j["kernel"] = {c.kernel_h, c.kernel_w};
                           j["stride"] = c.stride;
                           j["padding"] = c.padding;
                           j["weights"] = c.filters;
                           j["bias"] = detail::vector_json(c.bias);
                       },
                       [&](const FlattenLayer& f) {
                           j["kind"] = "flatten";
                           j["input_shape"] = f.input_shape.dims();
                       },
                       [&](const ActivationLayer& a) {
                           j["kind"] = "activation";
                           j["function"] = std::string(to_string(a.kind));
                           if (a.kind == ActivationKind::AdaptiveReLU) j["slope"] = a.slope;
                           j["input_shape"] = a.input_shape.dims();
                       },
                       [&](const MaxPoolLayer& p) {
                           j["kind"] = "maxpool";
                           j["input_shape"] = p.input_shape.dims();
                           j["pool"] = {p.pool_h, p.pool_w};
                           j["stride"] = p.stride;
                           j["padding"] = p.padding;
                       },
                   },
                   layer);
        layers.push_back(std::move(j));
    }
    doc["layers"] = std::move(layers);
    return doc;
}

inline void save_model(const Network& net, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write model file " + path.string());
    f << model_to_json(net).dump(1) << '\n';
}

namespace detail {

inline VerificationQuery query_from_json(const Json& j, Norm norm) {
    if (!j.is_object() || !j.contains("x0") || !j.contains("label"))
        throw ParseError("input file: each query needs 'x0' and 'label'");
    VerificationQuery q;
    const auto x = j.at("x0").get<std::vector<double>>();
    q.x0 = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    const auto& label = j.at("label");
    if (!label.is_number_integer() || label.get<long long>() < 0)
        throw ParseError("input file: label must be a non-negative integer");
    q.label = label.get<std::size_t>();
    q.norm = norm;
    if (j.contains("eps")) q.eps = j.at("eps").get<double>();
    return q;
}

inline std::optional<std::vector<double>> parse_csv_numbers(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        if (b == std::string::npos) return std::nullopt;
        const std::string t = cell.substr(b, e - b + 1);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size()) return std::nullopt;
        out.push_back(v);
    }
    return out;
}

}  // namespace detail

/// Queries from JSON ({x0, label}, a list of those, or {"queries": [...]})
/// or CSV (one input per line, label in the last column; an optional header
/// line and '#' comments are skipped).
inline std::vector<VerificationQuery> parse_queries(const std::string& text, Norm norm) {
    std::vector<VerificationQuery> out;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return out;
    if (text[first] == '{' || text[first] == '[') {
        Json doc;
        try {
            doc = Json::parse(text);
            if (doc.is_object() && doc.contains("queries")) doc = doc.at("queries");
            if (doc.is_object()) {
                out.push_back(detail::query_from_json(doc, norm));
            } else {
                for (const auto& j : doc) out.push_back(detail::query_from_json(j, norm));
            }
        } catch (const Json::exception& e) {
            throw ParseError(std::string("input file: ") + e.what());
        }
        return out;
    }
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
            continue;
        auto nums = detail::parse_csv_numbers(line);
        if (!nums) {
            if (out.empty() && lineno == 1) continue;  // header
            throw ParseError("input file: line " + std::to_string(lineno) + " is not numeric CSV");
        }
        if (nums->size() < 2) throw ParseError("input file: line " + std::to_string(lineno) + " needs inputs and a label");
        const double label = nums->back();
        if (label < 0 || label != std::floor(label))
            throw ParseError("input file: line " + std::to_string(lineno) + " has a non-integer label");
        VerificationQuery q;
        q.x0 = Eigen::Map<const Vector>(nums->data(), static_cast<Eigen::Index>(nums->size() - 1));
        q.label = static_cast<std::size_t>(label);
        q.norm = norm;
        out.push_back(std::move(q));
    }
    return out;
}

inline std::vector<VerificationQuery> load_queries(const std::filesystem::path& path, Norm norm) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open input file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_queries(ss.str(), norm);
}

inline Json queries_to_json(const std::vector<VerificationQuery>& queries) {
    Json arr = Json::array();
    for (const auto& q : queries) {
        Json j;
        j["x0"] = detail::vector_json(q.x0);
        j["label"] = q.label;
        if (q.eps) j["eps"] = *q.eps;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace maxlin

#endif  // MAXLIN_MODEL_IO_HPP
