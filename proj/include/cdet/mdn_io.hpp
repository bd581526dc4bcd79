#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cdet/mdn.hpp"

namespace cdet {

namespace detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i];
    return v;
}

}  // namespace detail

/// Self-describing JSON form of a trained generator: spec, normalization,
/// and the flat parameter array. Doubles round-trip exactly.
inline nlohmann::json generator_to_json(const MdnGenerator& gen) {
    nlohmann::json j;
    j["format"] = "cdet-mdn-generator";
    j["version"] = 1;
    j["p"] = gen.spec.p;
    j["d"] = gen.spec.d;
    j["mixtures"] = gen.spec.mixtures;
    j["sigma_floor"] = gen.spec.sigma_floor;
    j["hidden_widths"] = gen.spec.backbone.hidden_widths;
    j["activation"] =
        gen.spec.backbone.activation == Activation::Relu ? "relu" : "leaky-relu";
    j["leaky_slope"] = gen.spec.backbone.leaky_slope;
    j["seed"] = gen.spec.backbone.seed;
    j["y_shift"] = detail::vector_to_json(gen.y_norm.shift);
    j["y_scale"] = detail::vector_to_json(gen.y_norm.scale);
    j["x_shift"] = detail::vector_to_json(gen.x_norm.shift);
    j["x_scale"] = detail::vector_to_json(gen.x_norm.scale);

    nlohmann::json members = nlohmann::json::array();
    for (const FnnParams& params : gen.members) {
        nlohmann::json flat = nlohmann::json::array();
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            const auto& w = params.weights[l];
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
            const auto& b = params.biases[l];
            for (Eigen::Index r = 0; r < b.size(); ++r) flat.push_back(b(r));
        }
        members.push_back(std::move(flat));
    }
    j["members"] = std::move(members);
    return j;
}

inline MdnGenerator generator_from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != "cdet-mdn-generator")
        throw std::runtime_error("generator_from_json: not a generator file");
    MdnGenerator gen;
    gen.spec = MdnSpec::make(j["p"], j["d"], j["mixtures"],
                             j["hidden_widths"].get<std::vector<int>>(),
                             j.value("seed", std::uint64_t{0}));
    gen.spec.sigma_floor = j["sigma_floor"];
    gen.spec.backbone.activation =
        j["activation"] == "relu" ? Activation::Relu : Activation::LeakyRelu;
    gen.spec.backbone.leaky_slope = j["leaky_slope"];
    gen.spec.validate();
    gen.y_norm.shift = detail::vector_from_json(j["y_shift"]);
    gen.y_norm.scale = detail::vector_from_json(j["y_scale"]);
    gen.x_norm.shift = detail::vector_from_json(j["x_shift"]);
    gen.x_norm.scale = detail::vector_from_json(j["x_scale"]);

    const auto dims = gen.spec.backbone.layer_dims();
    for (const auto& flat : j["members"]) {
        FnnParams params;
        std::size_t pos = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            Eigen::MatrixXd w(dims[l + 1], dims[l]);
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat.at(pos++);
            Eigen::VectorXd b(dims[l + 1]);
            for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = flat.at(pos++);
            params.weights.push_back(std::move(w));
            params.biases.push_back(std::move(b));
        }
        if (pos != flat.size())
            throw std::runtime_error("generator_from_json: parameter count mismatch");
        gen.members.push_back(std::move(params));
    }
    if (gen.members.empty())
        throw std::runtime_error("generator_from_json: no member networks");
    return gen;
}

inline void save_generator(const MdnGenerator& gen, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_generator: cannot open " + path);
    out << generator_to_json(gen).dump(1) << '\n';
}

inline MdnGenerator load_generator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_generator: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return generator_from_json(j);
}

}  // namespace cdet
