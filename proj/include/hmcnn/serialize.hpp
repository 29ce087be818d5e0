#ifndef HMCNN_SERIALIZE_HPP
#define HMCNN_SERIALIZE_HPP

// JSON documents for networks.
//
// Dense:
//   {"type": "dense", "input_dim": t,
//    "hidden": [{"in": k_{r-1}, "out": k_r, "weights": [row-major out x in], "bias": [...]}, ...],
//    "output_weights": [...], "output_bias": b}
// Conv:
//   {"type": "conv",
//    "layers": [{"in_channels": .., "out_channels": .., "filter_size": M,
//                "filters": [flat, index ((s2*in + s1)*M + t1)*M + t2], "bias": [...]}, ...],
//    "output_weights": [...]}
// Composite:
//   {"type": "composite", "parameter_count": W, "convs": [conv, ...], "head": dense}

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "hmcnn/conv.hpp"
#include "hmcnn/dense.hpp"

namespace hmcnn {

using json = nlohmann::json;

inline json to_json(const DenseNet& net)
{
    json j;
    j["type"] = "dense";
    j["input_dim"] = net.input_dim;
    j["hidden"] = json::array();
    for (const auto& h : net.hidden)
        j["hidden"].push_back({{"in", h.in}, {"out", h.out}, {"weights", h.weights}, {"bias", h.bias}});
    j["output_weights"] = net.out_weights;
    j["output_bias"] = net.out_bias;
    return j;
}

inline json to_json(const ConvNet& net)
{
    json j;
    j["type"] = "conv";
    j["layers"] = json::array();
    for (const auto& l : net.layers)
        j["layers"].push_back({{"in_channels", l.in_ch},
                               {"out_channels", l.out_ch},
                               {"filter_size", l.M},
                               {"filters", l.filters},
                               {"bias", l.bias}});
    j["output_weights"] = net.out_weights;
    return j;
}

inline json to_json(const CompositeNet& net)
{
    json j;
    j["type"] = "composite";
    j["parameter_count"] = net.parameter_count();
    j["convs"] = json::array();
    for (const auto& c : net.convs) j["convs"].push_back(to_json(c));
    j["head"] = to_json(net.head);
    return j;
}

namespace detail {

inline void expect_type(const json& j, const char* type)
{
    if (!j.is_object() || j.value("type", std::string{}) != type)
        throw invalid_input(std::string("network JSON: expected type \"") + type + "\"");
}

} // namespace detail

inline DenseNet dense_from_json(const json& j)
{
    detail::expect_type(j, "dense");
    DenseNet net;
    net.input_dim = j.at("input_dim").get<int>();
    for (const auto& h : j.at("hidden")) {
        DenseLayer L;
        L.in = h.at("in").get<int>();
        L.out = h.at("out").get<int>();
        L.weights = h.at("weights").get<std::vector<double>>();
        L.bias = h.at("bias").get<std::vector<double>>();
        net.hidden.push_back(std::move(L));
    }
    net.out_weights = j.at("output_weights").get<std::vector<double>>();
    net.out_bias = j.at("output_bias").get<double>();
    net.validate();
    return net;
}

inline ConvNet conv_from_json(const json& j)
{
    detail::expect_type(j, "conv");
    ConvNet net;
    for (const auto& l : j.at("layers")) {
        ConvLayer L;
        L.in_ch = l.at("in_channels").get<int>();
        L.out_ch = l.at("out_channels").get<int>();
        L.M = l.at("filter_size").get<int>();
        L.filters = l.at("filters").get<std::vector<double>>();
        L.bias = l.at("bias").get<std::vector<double>>();
        net.layers.push_back(std::move(L));
    }
    net.out_weights = j.at("output_weights").get<std::vector<double>>();
    net.validate();
    return net;
}

inline CompositeNet composite_from_json(const json& j)
{
    detail::expect_type(j, "composite");
    CompositeNet net;
    for (const auto& c : j.at("convs")) net.convs.push_back(conv_from_json(c));
    net.head = dense_from_json(j.at("head"));
    net.validate();
    if (j.contains("parameter_count") && j.at("parameter_count").get<std::size_t>() != net.parameter_count())
        throw invalid_input("network JSON: parameter_count does not match the arrays");
    return net;
}

inline void save_json(const json& j, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

} // namespace hmcnn

#endif
