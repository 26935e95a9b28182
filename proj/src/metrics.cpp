#include "cpalab/metrics.h"

#include "cpalab/error.h"
#include "cpalab/parallel.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace cpalab {

namespace {

double variance(const std::vector<double> &v) {
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v)
        s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size());
}

// Crossing of diff(x) = cw - inc from positive (success) at high SNR to
// non-positive at low SNR, scanning downwards; interpolated in log SNR.
std::optional<double> locate_crossing(const std::vector<double> &centers, const std::vector<double> &diff) {
    if (centers.empty() || diff.back() <= 0.0)
        return std::nullopt;
    for (std::size_t i = centers.size() - 1; i-- > 0;) {
        if (diff[i] <= 0.0) {
            const double x0 = std::log(centers[i]), x1 = std::log(centers[i + 1]);
            const double f = diff[i] / (diff[i] - diff[i + 1]);
            return std::exp(x0 + f * (x1 - x0));
        }
    }
    return std::nullopt;
}

} // namespace

double run_snr(const SimulationRun &run, std::size_t tau, const ArrayConfig &config, std::size_t target_pe) {
    if (!run.weights_known)
        throw ParameterError("SNR needs the run's weights");
    if (target_pe >= run.weights.rows())
        throw RangeError("target PE " + std::to_string(target_pe) + " out of range");
    const auto leak = pe_leakage(run.weights.row(target_pe), run.inputs, config);
    const std::size_t col = run.column_for(tau);
    const std::size_t n = run.n_traces();
    std::vector<double> exploitable(n), rest(n);
    for (std::size_t t = 0; t < n; ++t) {
        exploitable[t] = leak(t, tau);
        rest[t] = static_cast<double>(run.samples(t, col)) - exploitable[t];
    }
    const double noise = variance(rest);
    if (!(noise > 0.0))
        return kInfiniteSnr;
    return variance(exploitable) / noise;
}

std::vector<SnrPoint> snr_curve(std::span<const TraceCampaign> campaigns, std::size_t tau, std::size_t target_pe,
                                unsigned threads) {
    std::vector<SnrPoint> out;
    for (const auto &c : campaigns) {
        std::vector<double> snr(c.runs.size());
        parallel_for(c.runs.size(), threads,
                     [&](std::size_t i) { snr[i] = run_snr(c.runs[i], tau, c.config, target_pe); });
        SnrPoint pt;
        pt.n_pe = c.config.n_pe;
        pt.tau = tau;
        pt.n_runs = snr.size();
        double sum = 0.0, sum_sq = 0.0;
        std::size_t finite = 0;
        for (double s : snr) {
            if (std::isinf(s))
                continue;
            sum += s;
            sum_sq += s * s;
            ++finite;
        }
        if (finite == 0) {
            pt.snr = kInfiniteSnr;
        } else {
            const double n = static_cast<double>(finite);
            pt.snr = sum / n;
            if (finite > 1)
                pt.se = std::sqrt(std::max(0.0, (sum_sq - n * pt.snr * pt.snr) / (n - 1)) / n);
        }
        out.push_back(pt);
    }
    return out;
}

CrossPeResult cross_pe_dependence(std::size_t tau, std::size_t n_runs, const ArrayConfig &config,
                                  const CrossPeOptions &options) {
    if (n_runs < 1)
        throw ParameterError("cross_pe_dependence needs n_runs >= 1");
    if (options.n_traces < 2)
        throw ParameterError("cross_pe_dependence needs at least two traces");
    ArrayConfig single = config;
    single.n_pe = 1;
    single.validate();
    const std::size_t n_tau = tau + 1;
    const OperandRange wr = config.weight_range();
    const OperandRange xr = config.input_range();

    auto draw_inputs = [&](std::uint64_t seed) {
        Matrix<std::int32_t> x(options.n_traces, n_tau);
        for (std::size_t t = 0; t < options.n_traces; ++t) {
            Rng rng(derive_seed(seed, t + 1));
            for (auto &v : x.row(t))
                v = static_cast<std::int32_t>(rng.uniform_int(xr.min, xr.max));
        }
        return x;
    };
    auto column_rho = [&](std::span<const std::int32_t> a, std::span<const std::int32_t> b,
                          const Matrix<std::int32_t> &x) {
        const auto la = pe_leakage(a, x, single);
        const auto lb = pe_leakage(b, x, single);
        std::vector<double> ha(x.rows()), hb(x.rows());
        for (std::size_t t = 0; t < x.rows(); ++t) {
            ha[t] = la(t, tau);
            hb[t] = lb(t, tau);
        }
        return std::abs(pearson(ha, hb).value_or(0.0));
    };

    CrossPeResult res;
    res.tau = tau;
    res.n_runs = n_runs;
    std::vector<double> sampled(n_runs, 0.0);
    parallel_for(n_runs, options.threads, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(options.seed, r);
        Rng rng(derive_seed(seed, 0));
        std::vector<std::int32_t> a(n_tau), b(n_tau);
        do {
            for (std::size_t i = 0; i < n_tau; ++i) {
                a[i] = static_cast<std::int32_t>(rng.uniform_int(wr.min, wr.max));
                b[i] = static_cast<std::int32_t>(rng.uniform_int(wr.min, wr.max));
            }
        } while (a == b);
        sampled[r] = column_rho(a, b, draw_inputs(seed));
    });
    res.sampled_max = *std::max_element(sampled.begin(), sampled.end());

    if (options.witness_sweep && tau == 0) {
        const auto x = draw_inputs(derive_seed(options.seed, n_runs));
        std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
        for (std::int32_t w = wr.min; w <= wr.max; ++w) {
            if (w == 0)
                continue;
            for (unsigned k = 0; k < 8; ++k) {
                const std::int64_t w2 = static_cast<std::int64_t>(w) << k;
                if (wr.contains(w2))
                    pairs.emplace_back(w, static_cast<std::int32_t>(w2));
            }
        }
        std::vector<double> rho(pairs.size(), 0.0);
        parallel_for(pairs.size(), options.threads, [&](std::size_t i) {
            // Single-step vectors: only the step-0 weight enters the leakage.
            const std::int32_t a = pairs[i].first, b = pairs[i].second;
            rho[i] = column_rho(std::span(&a, 1), std::span(&b, 1), x);
        });
        res.witness_max = *std::max_element(rho.begin(), rho.end());
    }
    res.max_abs_rho = std::max(res.sampled_max, res.witness_max);
    return res;
}

CrossingPoint crossing_point(std::span<const SuccessPoint> curve) {
    if (curve.empty())
        throw RangeError("crossing_point: empty curve");
    CrossingPoint cp;
    cp.tau = curve.front().tau;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].tau != cp.tau)
            throw RangeError("crossing_point: curve mixes steps " + std::to_string(cp.tau) + " and " +
                             std::to_string(curve[i].tau));
        if (i > 0 && curve[i].n_pe <= curve[i - 1].n_pe)
            throw RangeError("crossing_point: n_pe values must be strictly increasing");
    }
    for (const auto &p : curve) {
        if (p.mean_correct < p.mean_incorrect) {
            cp.n_pe_star = p.n_pe;
            break;
        }
    }
    // Ambiguity band: where the difference is within two combined standard errors.
    std::optional<unsigned> lo, hi;
    for (const auto &p : curve) {
        const double diff = p.mean_correct - p.mean_incorrect;
        const double band = 2.0 * std::hypot(p.se_correct, p.se_incorrect);
        if (!lo && diff < band)
            lo = p.n_pe;
        if (!hi && diff < -band)
            hi = p.n_pe;
    }
    if (lo)
        cp.confidence = 0.5 * static_cast<double>(hi.value_or(curve.back().n_pe) - *lo);
    return cp;
}

SnrCurve correlation_vs_snr(std::span<const SnrObservation> observations, const SnrBinning &binning) {
    if (binning.n_bins < 1 || !(binning.lo > 0.0) || !(binning.hi > binning.lo))
        throw ParameterError("invalid SNR binning");
    const double llo = std::log(binning.lo), lhi = std::log(binning.hi);
    const double width = (lhi - llo) / static_cast<double>(binning.n_bins);

    struct Acc {
        double sum_c = 0.0, sum_c2 = 0.0, sum_i = 0.0;
        std::size_t n = 0;
        void add(const SnrObservation &o) {
            sum_c += o.rho_correct;
            sum_c2 += o.rho_correct * o.rho_correct;
            sum_i += o.best_incorrect;
            ++n;
        }
    };
    std::vector<Acc> pooled(binning.n_bins);
    std::map<std::size_t, std::vector<Acc>> per_tau;
    for (const auto &o : observations) {
        if (!(o.snr >= binning.lo) || !(o.snr < binning.hi))
            continue;
        const auto b = std::min(binning.n_bins - 1, static_cast<std::size_t>((std::log(o.snr) - llo) / width));
        pooled[b].add(o);
        auto &v = per_tau[o.tau];
        if (v.empty())
            v.resize(binning.n_bins);
        v[b].add(o);
    }

    SnrCurve curve;
    std::vector<double> centers, diff;
    for (std::size_t b = 0; b < binning.n_bins; ++b) {
        const Acc &a = pooled[b];
        if (a.n == 0)
            continue;
        SnrBin bin;
        bin.lo = std::exp(llo + width * static_cast<double>(b));
        bin.hi = std::exp(llo + width * static_cast<double>(b + 1));
        bin.center = std::sqrt(bin.lo * bin.hi);
        bin.count = a.n;
        const double n = static_cast<double>(a.n);
        bin.mean_correct = a.sum_c / n;
        bin.mean_incorrect = a.sum_i / n;
        if (a.n > 1)
            bin.se_correct =
                std::sqrt(std::max(0.0, (a.sum_c2 - n * bin.mean_correct * bin.mean_correct) / (n - 1)) / n);
        bin.envelope_min = 1.0;
        bin.envelope_max = 0.0;
        for (const auto &[tau, accs] : per_tau) {
            if (accs[b].n == 0)
                continue;
            const double m = accs[b].sum_c / static_cast<double>(accs[b].n);
            bin.envelope_min = std::min(bin.envelope_min, m);
            bin.envelope_max = std::max(bin.envelope_max, m);
        }
        curve.bins.push_back(bin);
        centers.push_back(bin.center);
        diff.push_back(bin.mean_correct - bin.mean_incorrect);
    }
    curve.threshold_mean = locate_crossing(centers, diff);

    for (const auto &[tau, accs] : per_tau) {
        std::vector<double> c, d;
        for (std::size_t b = 0; b < binning.n_bins; ++b) {
            if (accs[b].n == 0)
                continue;
            const double n = static_cast<double>(accs[b].n);
            c.push_back(std::exp(llo + width * (static_cast<double>(b) + 0.5)));
            d.push_back(accs[b].sum_c / n - accs[b].sum_i / n);
        }
        const auto t = locate_crossing(c, d);
        curve.threshold_per_tau.emplace_back(tau, t);
        if (t)
            curve.threshold_worst = std::max(curve.threshold_worst.value_or(0.0), *t);
    }
    return curve;
}

} // namespace cpalab
