#include "cpalab/cpa.h"

#include "cpalab/error.h"
#include "cpalab/parallel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cpalab {

namespace {

std::uint64_t saturating_pow(std::uint64_t base, unsigned exp) {
    std::uint64_t r = 1;
    for (unsigned i = 0; i < exp; ++i) {
        if (r > std::numeric_limits<std::uint64_t>::max() / base)
            return std::numeric_limits<std::uint64_t>::max();
        r *= base;
    }
    return r;
}

// Per-trace register value after steps 0..tau-1 for a fixed weight prefix.
void prefix_accumulators(std::span<const std::int32_t> prefix, const Matrix<std::int32_t> &inputs,
                         std::size_t n_traces, unsigned register_bits, std::vector<std::int32_t> &out) {
    out.assign(n_traces, 0);
    for (std::size_t t = 0; t < n_traces; ++t) {
        const auto x = inputs.row(t);
        std::int32_t z = 0;
        for (std::size_t s = 0; s < prefix.size(); ++s)
            z = wrap_register(mac32(z, prefix[s], x[s]), register_bits);
        out[t] = z;
    }
}

// Visit every candidate in blocks that share the weights of steps 0..tau-1.
// body(first_id, block_size, prefix_tuple).
template <class Body> void for_each_block(const HypothesisSpace &space, unsigned threads, Body &&body) {
    const OperandRange r = space.weight_range();
    const std::uint64_t block = r.count();
    const std::uint64_t n_blocks = space.size() / block;
    parallel_for(static_cast<std::size_t>(n_blocks), threads, [&](std::size_t b) {
        const auto first = static_cast<std::uint64_t>(b) * block;
        auto tuple = space.tuple(first);
        tuple.pop_back();
        body(first, block, std::span<const std::int32_t>(tuple));
    });
}

struct Column {
    std::vector<double> centered;
    double sum_sq = 0.0;
};

Column center(const SimulationRun &run, std::size_t column, std::size_t n) {
    Column c;
    c.centered.resize(n);
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t)
        mean += run.samples(t, column);
    mean /= static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) {
        c.centered[t] = static_cast<double>(run.samples(t, column)) - mean;
        c.sum_sq += c.centered[t] * c.centered[t];
    }
    return c;
}

} // namespace

HypothesisSpace::HypothesisSpace(std::size_t tau, HypothesisMode mode, OperandRange weight_range, std::uint64_t cap)
    : tau_(tau), mode_(std::move(mode)), range_(weight_range), cap_(cap) {
    if (const auto *full = std::get_if<FullEnumeration>(&mode_)) {
        if (full->k_weights != tau_ + 1)
            throw ParameterError("full enumeration at step " + std::to_string(tau_) + " needs " +
                                 std::to_string(tau_ + 1) + " weights, got " + std::to_string(full->k_weights));
        size_ = saturating_pow(range_.count(), full->k_weights);
    } else {
        const auto &known = std::get<KnownPrefix>(mode_);
        if (known.prefix.size() != tau_)
            throw ParameterError("known prefix for step " + std::to_string(tau_) + " needs " + std::to_string(tau_) +
                                 " weights, got " + std::to_string(known.prefix.size()));
        for (auto w : known.prefix)
            if (!range_.contains(w))
                throw RangeError("known prefix weight " + std::to_string(w) + " outside the weight range");
        size_ = range_.count();
    }
}

HypothesisSpace HypothesisSpace::full_enumeration(std::size_t tau, const ArrayConfig &config, std::uint64_t cap) {
    return {tau, FullEnumeration{static_cast<unsigned>(tau + 1)}, config.weight_range(), cap};
}

HypothesisSpace HypothesisSpace::known_prefix(std::vector<std::int32_t> prefix, const ArrayConfig &config,
                                              std::uint64_t cap) {
    const std::size_t tau = prefix.size();
    return {tau, KnownPrefix{std::move(prefix)}, config.weight_range(), cap};
}

void HypothesisSpace::check_capacity() const {
    if (size_ > cap_) {
        std::string msg = "hypothesis space of " +
                          (size_ == std::numeric_limits<std::uint64_t>::max() ? std::string("more than 2^64")
                                                                               : std::to_string(size_)) +
                          " candidates exceeds the cap of " + std::to_string(cap_);
        if (is_full_enumeration() && tau_ > 0)
            msg += "; use known-prefix mode to enumerate only the weight of step " + std::to_string(tau_);
        throw CapacityError(msg);
    }
}

std::vector<std::int32_t> HypothesisSpace::tuple(std::uint64_t id) const {
    const std::uint64_t radix = range_.count();
    std::vector<std::int32_t> out(tau_ + 1);
    if (const auto *known = std::get_if<KnownPrefix>(&mode_)) {
        std::copy(known->prefix.begin(), known->prefix.end(), out.begin());
        out[tau_] = range_.min + static_cast<std::int32_t>(id % radix);
        return out;
    }
    for (std::size_t i = tau_ + 1; i-- > 0;) {
        out[i] = range_.min + static_cast<std::int32_t>(id % radix);
        id /= radix;
    }
    return out;
}

std::optional<std::uint64_t> HypothesisSpace::find(std::span<const std::int32_t> weights) const {
    if (weights.size() < tau_ + 1)
        return std::nullopt;
    for (std::size_t i = 0; i <= tau_; ++i)
        if (!range_.contains(weights[i]))
            return std::nullopt;
    const std::uint64_t radix = range_.count();
    if (const auto *known = std::get_if<KnownPrefix>(&mode_)) {
        if (!std::equal(known->prefix.begin(), known->prefix.end(), weights.begin()))
            return std::nullopt;
        return static_cast<std::uint64_t>(weights[tau_] - range_.min);
    }
    std::uint64_t id = 0;
    for (std::size_t i = 0; i <= tau_; ++i)
        id = id * radix + static_cast<std::uint64_t>(weights[i] - range_.min);
    return id;
}

Matrix<std::uint8_t> hypothesize_leakage(const HypothesisSpace &space, const Matrix<std::int32_t> &inputs,
                                         const ArrayConfig &config) {
    space.check_capacity();
    if (inputs.cols() <= space.tau())
        throw DimensionError("inputs cover " + std::to_string(inputs.cols()) + " steps, attack needs step " +
                             std::to_string(space.tau()));
    const std::size_t n = inputs.rows();
    const std::uint32_t mask = config.register_mask();
    const std::size_t tau = space.tau();
    Matrix<std::uint8_t> out(static_cast<std::size_t>(space.size()), n);
    for_each_block(space, 1, [&](std::uint64_t first, std::uint64_t block, std::span<const std::int32_t> prefix) {
        std::vector<std::int32_t> zprev;
        prefix_accumulators(prefix, inputs, n, config.register_bits, zprev);
        for (std::uint64_t k = 0; k < block; ++k) {
            const std::int32_t w = space.weight_range().min + static_cast<std::int32_t>(k);
            auto row = out.row(static_cast<std::size_t>(first + k));
            for (std::size_t t = 0; t < n; ++t) {
                const std::int32_t next = wrap_register(mac32(zprev[t], w, inputs(t, tau)), config.register_bits);
                row[t] = static_cast<std::uint8_t>(step_leakage(zprev[t], next, mask));
            }
        }
    });
    return out;
}

std::optional<double> pearson(std::span<const double> h, std::span<const double> p) {
    if (h.size() != p.size())
        throw ParameterError("pearson: vectors differ in length (" + std::to_string(h.size()) + " vs " +
                             std::to_string(p.size()) + ")");
    if (h.size() < 2)
        throw ParameterError("pearson: need at least two samples");
    double mean_h = 0.0, mean_p = 0.0, m2_h = 0.0, m2_p = 0.0, co = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double dh = h[i] - mean_h;
        const double dp = p[i] - mean_p;
        mean_h += dh / n;
        mean_p += dp / n;
        m2_h += dh * (h[i] - mean_h);
        m2_p += dp * (p[i] - mean_p);
        co += dh * (p[i] - mean_p);
    }
    if (!(m2_h > 0.0) || !(m2_p > 0.0))
        return std::nullopt;
    return std::clamp(co / std::sqrt(m2_h * m2_p), -1.0, 1.0);
}

bool CorrelationResult::recovered() const {
    if (!correct_index)
        return false;
    for (auto id : argmax) {
        if (id == *correct_index)
            return true;
        if (alias[id] && tau == 0)
            return true;
    }
    return false;
}

CorrelationResult attack(const SimulationRun &run, const HypothesisSpace &space, std::size_t sample_column,
                         const ArrayConfig &config, const AttackOptions &options) {
    space.check_capacity();
    const std::size_t tau = space.tau();
    if (run.inputs.empty())
        throw UnusableForCpaError("run has no inputs; correlation attacks need the known inputs");
    if (run.inputs.cols() <= tau)
        throw DimensionError("inputs cover " + std::to_string(run.inputs.cols()) + " steps, attack needs step " +
                             std::to_string(tau));
    if (sample_column >= run.samples.cols())
        throw RangeError("sample column " + std::to_string(sample_column) + " out of range");
    const std::size_t n = options.n_traces == 0 ? run.n_traces() : options.n_traces;
    if (n < 2 || n > run.n_traces())
        throw RangeError("attack on " + std::to_string(n) + " traces, run holds " + std::to_string(run.n_traces()));

    const Column p = center(run, sample_column, n);
    const std::uint32_t mask = config.register_mask();
    const auto count = static_cast<std::size_t>(space.size());

    CorrelationResult res;
    res.tau = tau;
    res.n_traces_used = n;
    res.coefficients.assign(count, 0.0);
    res.undefined.assign(count, 0);
    res.correct.assign(count, 0);
    res.alias.assign(count, 0);

    const auto nd = static_cast<double>(n);
    for_each_block(space, options.threads,
                   [&](std::uint64_t first, std::uint64_t block, std::span<const std::int32_t> prefix) {
                       std::vector<std::int32_t> zprev;
                       prefix_accumulators(prefix, run.inputs, n, config.register_bits, zprev);
                       std::vector<std::int32_t> x(n);
                       for (std::size_t t = 0; t < n; ++t)
                           x[t] = run.inputs(t, tau);
                       for (std::uint64_t k = 0; k < block; ++k) {
                           const std::int32_t w = space.weight_range().min + static_cast<std::int32_t>(k);
                           std::int64_t sum = 0, sum_sq = 0;
                           double cross = 0.0;
                           for (std::size_t t = 0; t < n; ++t) {
                               const std::int32_t next =
                                   wrap_register(mac32(zprev[t], w, x[t]), config.register_bits);
                               const auto h = static_cast<std::int64_t>(step_leakage(zprev[t], next, mask));
                               sum += h;
                               sum_sq += h * h;
                               cross += static_cast<double>(h) * p.centered[t];
                           }
                           // n * S_hh is an exact integer.
                           const std::int64_t n_shh = static_cast<std::int64_t>(n) * sum_sq - sum * sum;
                           const auto id = static_cast<std::size_t>(first + k);
                           if (n_shh <= 0 || !(p.sum_sq > 0.0)) {
                               res.undefined[id] = 1;
                               continue;
                           }
                           const double shh = static_cast<double>(n_shh) / nd;
                           res.coefficients[id] = std::min(1.0, std::abs(cross) / std::sqrt(shh * p.sum_sq));
                       }
                   });

    if (run.weights_known) {
        for (std::size_t pe = 0; pe < run.weights.rows(); ++pe) {
            const auto id = space.find(run.weights.row(pe));
            if (!id)
                continue;
            if (!res.correct[*id])
                res.correct_indices.push_back(*id);
            res.correct[*id] = 1;
            if (pe == options.target_pe)
                res.correct_index = *id;
        }
        std::sort(res.correct_indices.begin(), res.correct_indices.end());
        if (tau == 0) {
            const OperandRange r = space.weight_range();
            for (auto id : res.correct_indices) {
                const std::int64_t w = space.tuple(id)[0];
                if (w == 0)
                    continue;
                for (std::int64_t m = 2; m <= (std::int64_t{1} << 30); m *= 2) {
                    const std::int64_t up = w * m;
                    if (r.contains(up) && !res.correct[static_cast<std::size_t>(up - r.min)])
                        res.alias[static_cast<std::size_t>(up - r.min)] = 1;
                    if (w % m == 0) {
                        const std::int64_t down = w / m;
                        if (r.contains(down) && !res.correct[static_cast<std::size_t>(down - r.min)])
                            res.alias[static_cast<std::size_t>(down - r.min)] = 1;
                    }
                    if (!r.contains(up) && w % m != 0)
                        break;
                }
            }
        }
    }

    double best = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
        if (res.undefined[i])
            continue;
        best = std::max(best, res.coefficients[i]);
        if (res.correct[i])
            res.best_correct = std::max(res.best_correct, res.coefficients[i]);
        else if (!res.alias[i])
            res.best_incorrect = std::max(res.best_incorrect, res.coefficients[i]);
    }
    if (best >= 0.0) {
        const double tol = 1e-12;
        for (std::size_t i = 0; i < count; ++i)
            if (!res.undefined[i] && res.coefficients[i] >= best - tol)
                res.argmax.push_back(i);
    }
    return res;
}

HypothesisSpace default_space(const SimulationRun &run, std::size_t tau, const ArrayConfig &config,
                              std::size_t target_pe) {
    if (tau == 0)
        return HypothesisSpace::full_enumeration(0, config);
    if (!run.weights_known)
        throw ParameterError("known-prefix attack at step " + std::to_string(tau) +
                             " needs the weights of the earlier steps");
    if (target_pe >= run.weights.rows())
        throw RangeError("target PE " + std::to_string(target_pe) + " out of range");
    const auto w = run.weights.row(target_pe);
    return HypothesisSpace::known_prefix(std::vector<std::int32_t>(w.begin(), w.begin() + static_cast<long>(tau)),
                                         config);
}

namespace {

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double se() const {
        if (n < 2)
            return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
        return std::sqrt(var / static_cast<double>(n));
    }
};

} // namespace

std::vector<SuccessPoint> success_curve(std::span<const TraceCampaign> campaigns, std::span<const std::size_t> taus,
                                        const SuccessOptions &options) {
    std::vector<SuccessPoint> out;
    for (const auto &campaign : campaigns) {
        for (auto tau : taus) {
            const std::size_t n_runs = campaign.runs.size();
            std::vector<double> cw(n_runs), inc(n_runs);
            std::vector<std::vector<double>> coeffs(n_runs);
            std::vector<std::vector<std::uint8_t>> excluded(n_runs);
            parallel_for(n_runs, options.threads, [&](std::size_t i) {
                const auto &run = campaign.runs[i];
                const auto space = default_space(run, tau, campaign.config, options.target_pe);
                AttackOptions ao;
                ao.target_pe = options.target_pe;
                const auto res = attack(run, space, run.column_for(tau), campaign.config, ao);
                cw[i] = res.target_rho().value_or(0.0);
                inc[i] = res.best_incorrect;
                if (options.aggregation == IncorrectAggregation::MeanThenMax) {
                    coeffs[i] = res.coefficients;
                    excluded[i].resize(res.coefficients.size());
                    for (std::size_t k = 0; k < excluded[i].size(); ++k)
                        excluded[i][k] = res.correct[k] | res.alias[k] | res.undefined[k];
                }
            });
            Moments mc, mi;
            for (std::size_t i = 0; i < n_runs; ++i) {
                mc.add(cw[i]);
                mi.add(inc[i]);
            }
            SuccessPoint pt;
            pt.n_pe = campaign.config.n_pe;
            pt.tau = tau;
            pt.n_runs = n_runs;
            pt.mean_correct = mc.mean();
            pt.se_correct = mc.se();
            if (options.aggregation == IncorrectAggregation::MaxThenMean) {
                pt.mean_incorrect = mi.mean();
                pt.se_incorrect = mi.se();
            } else {
                const std::size_t n_cand = coeffs.empty() ? 0 : coeffs[0].size();
                for (std::size_t k = 0; k < n_cand; ++k) {
                    Moments m;
                    for (std::size_t i = 0; i < n_runs; ++i)
                        if (!excluded[i][k])
                            m.add(coeffs[i][k]);
                    if (m.n && m.mean() > pt.mean_incorrect) {
                        pt.mean_incorrect = m.mean();
                        pt.se_incorrect = m.se();
                    }
                }
            }
            out.push_back(pt);
        }
    }
    return out;
}

std::vector<ProgressPoint> trace_count_progression(const SimulationRun &run, const HypothesisSpace &space,
                                                   std::size_t sample_column, std::span<const std::size_t> checkpoints,
                                                   const ArrayConfig &config, const AttackOptions &options) {
    std::size_t prev = 0;
    for (auto c : checkpoints) {
        if (c < 2 || c > run.n_traces())
            throw RangeError("checkpoint " + std::to_string(c) + " outside [2, " + std::to_string(run.n_traces()) +
                             "]");
        if (c <= prev)
            throw RangeError("checkpoints must be strictly increasing");
        prev = c;
    }
    std::vector<ProgressPoint> out;
    out.reserve(checkpoints.size());
    for (auto c : checkpoints) {
        AttackOptions ao = options;
        ao.n_traces = c;
        const auto res = attack(run, space, sample_column, config, ao);
        ProgressPoint pt;
        pt.n_traces = c;
        pt.rho_correct = res.target_rho().value_or(0.0);
        pt.undefined = res.target_undefined();
        pt.best_incorrect = res.best_incorrect;
        out.push_back(pt);
    }
    return out;
}

} // namespace cpalab
