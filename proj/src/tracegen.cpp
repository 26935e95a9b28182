#include "cpalab/tracegen.h"

#include "cpalab/error.h"
#include "cpalab/parallel.h"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cpalab {

std::string describe(const WeightDistribution &dist) {
    if (std::holds_alternative<UniformWeights>(dist))
        return "uniform";
    if (const auto *n = std::get_if<NormalWeights>(&dist)) {
        std::ostringstream os;
        os << "normal(sigma=" << n->sigma << ")";
        return os.str();
    }
    return "file(" + std::get<FileWeights>(dist).path.string() + ")";
}

std::vector<std::int32_t> read_weight_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw ParameterError("cannot open weight file " + path.string());
    std::vector<std::int32_t> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        for (auto &c : line)
            if (c == ',' || c == ';')
                c = ' ';
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            std::size_t used = 0;
            long v = 0;
            try {
                v = std::stol(tok, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != tok.size())
                throw ParseError(line_no, "weight file " + path.string() + ": not an integer: '" + tok + "'");
            values.push_back(static_cast<std::int32_t>(v));
        }
    }
    return values;
}

Matrix<std::int32_t> sample_weights(const WeightDistribution &dist, const ArrayConfig &config,
                                    std::size_t n_tau, Rng &rng) {
    const OperandRange range = config.weight_range();
    Matrix<std::int32_t> w(config.n_pe, n_tau);
    if (std::holds_alternative<UniformWeights>(dist)) {
        for (auto &v : w.data())
            v = static_cast<std::int32_t>(rng.uniform_int(range.min, range.max));
    } else if (const auto *normal = std::get_if<NormalWeights>(&dist)) {
        if (!(normal->sigma > 0.0) || !std::isfinite(normal->sigma))
            throw ParameterError("normal weight distribution needs sigma > 0");
        for (auto &v : w.data()) {
            const double r = std::nearbyint(normal->sigma * rng.normal());
            v = static_cast<std::int32_t>(std::clamp<double>(r, range.min, range.max));
        }
    } else {
        const auto &file = std::get<FileWeights>(dist);
        const auto values = read_weight_file(file.path);
        if (values.size() < w.size())
            throw DimensionError("weight file " + file.path.string() + " holds " + std::to_string(values.size()) +
                                 " values, need " + std::to_string(w.size()) + " (n_pe * n_tau)");
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!range.contains(values[i]))
                throw RangeError("weight file value " + std::to_string(values[i]) + " at position " +
                                 std::to_string(i) + " outside the weight range");
            w.data()[i] = values[i];
        }
    }
    return w;
}

std::size_t SimulationRun::column_for(std::size_t tau) const {
    if (window.empty()) {
        if (tau >= samples.cols())
            throw RangeError("step " + std::to_string(tau) + " has no sample column");
        return tau;
    }
    if (tau >= window.size() || window[tau] == static_cast<std::size_t>(-1))
        throw RangeError("step " + std::to_string(tau) + " is not mapped by the sample window");
    return window[tau];
}

Matrix<std::uint8_t> pe_leakage(std::span<const std::int32_t> weights, const Matrix<std::int32_t> &inputs,
                                const ArrayConfig &config) {
    if (weights.size() < inputs.cols())
        throw DimensionError("pe_leakage: fewer weights than steps");
    const std::uint32_t mask = config.register_mask();
    Matrix<std::uint8_t> out(inputs.rows(), inputs.cols());
    for (std::size_t t = 0; t < inputs.rows(); ++t) {
        const auto x = inputs.row(t);
        std::int32_t z = 0;
        for (std::size_t tau = 0; tau < x.size(); ++tau) {
            const std::int32_t next = wrap_register(mac32(z, weights[tau], x[tau]), config.register_bits);
            out(t, tau) = static_cast<std::uint8_t>(step_leakage(z, next, mask));
            z = next;
        }
    }
    return out;
}

SimulationRun generate_run(const ArrayConfig &config, const WeightDistribution &dist, std::size_t n_tau,
                           std::size_t n_traces, std::uint64_t seed, unsigned threads) {
    config.validate();
    if (n_tau < 1)
        throw ParameterError("n_tau must be >= 1");
    if (n_traces < 2)
        throw ParameterError("n_traces must be >= 2, got " + std::to_string(n_traces));

    SimulationRun run;
    run.seed = seed;
    Rng weight_rng(derive_seed(seed, 0));
    run.weights = sample_weights(dist, config, n_tau, weight_rng);
    run.inputs = Matrix<std::int32_t>(n_traces, n_tau);
    run.samples = Matrix<float>(n_traces, n_tau);

    const OperandRange xr = config.input_range();
    const std::uint32_t mask = config.register_mask();
    const unsigned n_pe = config.n_pe;
    parallel_for(n_traces, threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t + 1));
        auto x = run.inputs.row(t);
        for (auto &v : x)
            v = static_cast<std::int32_t>(rng.uniform_int(xr.min, xr.max));
        std::vector<std::uint32_t> power(n_tau, 0);
        for (unsigned pe = 0; pe < n_pe; ++pe) {
            const auto w = run.weights.row(pe);
            std::int32_t z = 0;
            for (std::size_t tau = 0; tau < n_tau; ++tau) {
                const std::int32_t next = wrap_register(mac32(z, w[tau], x[tau]), config.register_bits);
                power[tau] += step_leakage(z, next, mask);
                z = next;
            }
        }
        auto out = run.samples.row(t);
        for (std::size_t tau = 0; tau < n_tau; ++tau) {
            double p = static_cast<double>(power[tau]);
            if (config.noise_sigma > 0.0)
                p += config.noise_sigma * rng.normal();
            out[tau] = static_cast<float>(p);
        }
    });
    return run;
}

TraceCampaign generate_campaign(const ArrayConfig &config, const WeightDistribution &dist, std::size_t n_tau,
                                std::size_t n_traces, std::size_t n_runs, std::uint64_t master_seed,
                                unsigned threads) {
    if (n_runs < 1)
        throw ParameterError("n_runs must be >= 1");
    TraceCampaign c;
    c.config = config;
    c.distribution = dist;
    c.n_tau = n_tau;
    c.n_traces = n_traces;
    c.master_seed = master_seed;
    c.runs.resize(n_runs);
    parallel_for(n_runs, threads, [&](std::size_t i) {
        c.runs[i] = generate_run(config, dist, n_tau, n_traces, run_seed(master_seed, i));
    });
    return c;
}

} // namespace cpalab
