#include "cpalab/json_io.h"

#include "cpalab/error.h"

namespace cpalab {

using nlohmann::json;

json to_json(const ArrayConfig &c) {
    return {{"n_pe", c.n_pe},
            {"weight_bits", c.weight_bits},
            {"input_bits", c.input_bits},
            {"register_bits", c.register_bits},
            {"noise_sigma", c.noise_sigma},
            {"weight_encoding", to_string(c.weight_encoding)},
            {"input_encoding", to_string(c.input_encoding)}};
}

ArrayConfig array_config_from_json(const json &j) {
    if (!j.is_object())
        throw ValidationError("array config must be a JSON object");
    ArrayConfig c;
    for (const auto &[key, value] : j.items()) {
        try {
            if (key == "n_pe")
                c.n_pe = value.get<unsigned>();
            else if (key == "weight_bits")
                c.weight_bits = value.get<unsigned>();
            else if (key == "input_bits")
                c.input_bits = value.get<unsigned>();
            else if (key == "register_bits")
                c.register_bits = value.get<unsigned>();
            else if (key == "noise_sigma")
                c.noise_sigma = value.get<double>();
            else if (key == "weight_encoding")
                c.weight_encoding = encoding_from_string(value.get<std::string>());
            else if (key == "input_encoding")
                c.input_encoding = encoding_from_string(value.get<std::string>());
            else
                throw ValidationError("unknown array config field '" + key + "'");
        } catch (const json::exception &e) {
            throw ValidationError("array config field '" + key + "': " + e.what());
        }
        // Negative JSON numbers wrap when read as unsigned.
        if (value.is_number_integer() && value.get<long long>() < 0)
            throw ValidationError("array config field '" + key + "' must not be negative");
    }
    return c;
}

json to_json(const WeightDistribution &dist) {
    if (std::holds_alternative<UniformWeights>(dist))
        return {{"kind", "uniform"}};
    if (const auto *n = std::get_if<NormalWeights>(&dist))
        return {{"kind", "normal"}, {"sigma", n->sigma}};
    return {{"kind", "file"}, {"path", std::get<FileWeights>(dist).path.string()}};
}

WeightDistribution distribution_from_json(const json &j) {
    if (j.is_string())
        return distribution_from_json(json{{"kind", j}});
    if (!j.is_object() || !j.contains("kind"))
        throw ValidationError("distribution must be an object with a 'kind' field");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "uniform")
        return UniformWeights{};
    if (kind == "normal") {
        const double sigma = j.value("sigma", 20.0);
        if (!(sigma > 0.0))
            throw ValidationError("normal distribution sigma must be > 0");
        return NormalWeights{sigma};
    }
    if (kind == "file") {
        if (!j.contains("path"))
            throw ValidationError("file distribution needs a 'path'");
        return FileWeights{j.at("path").get<std::string>()};
    }
    throw ValidationError("unknown distribution kind '" + kind + "'");
}

} // namespace cpalab
