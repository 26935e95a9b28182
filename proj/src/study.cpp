#include "cpalab/study.h"

#include "cpalab/error.h"
#include "cpalab/parallel.h"

#include <algorithm>
#include <cmath>

namespace cpalab {

namespace {

struct RunRecord {
    std::vector<double> rho_correct;
    std::vector<double> best_incorrect;
    std::vector<double> snr;
    std::vector<std::vector<double>> masked; ///< MeanThenMax only; NaN marks excluded
};

struct Moments {
    double sum = 0.0, sum_sq = 0.0;
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
        const double dn = static_cast<double>(n);
        const double m = mean();
        return std::sqrt(std::max(0.0, (sum_sq - dn * m * m) / (dn - 1)) / dn);
    }
};

RunRecord analyse_run(const SimulationRun &run, const StudyConfig &cfg, const ArrayConfig &array) {
    RunRecord rec;
    const auto leak = pe_leakage(run.weights.row(cfg.target_pe), run.inputs, array);
    const std::size_t n = run.n_traces();
    for (auto tau : cfg.taus) {
        const auto space = default_space(run, tau, array, cfg.target_pe);
        AttackOptions ao;
        ao.target_pe = cfg.target_pe;
        const auto res = attack(run, space, tau, array, ao);
        rec.rho_correct.push_back(res.target_rho().value_or(0.0));
        rec.best_incorrect.push_back(res.best_incorrect);
        if (cfg.aggregation == IncorrectAggregation::MeanThenMax) {
            std::vector<double> m(res.coefficients.size());
            for (std::size_t k = 0; k < m.size(); ++k)
                m[k] = (res.correct[k] || res.alias[k] || res.undefined[k]) ? std::nan("") : res.coefficients[k];
            rec.masked.push_back(std::move(m));
        }

        double me = 0.0, mr = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            me += leak(t, tau);
            mr += run.samples(t, tau) - leak(t, tau);
        }
        me /= static_cast<double>(n);
        mr /= static_cast<double>(n);
        double ve = 0.0, vr = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double e = leak(t, tau) - me;
            const double r = run.samples(t, tau) - leak(t, tau) - mr;
            ve += e * e;
            vr += r * r;
        }
        rec.snr.push_back(vr > 0.0 ? ve / vr : kInfiniteSnr);
    }
    return rec;
}

} // namespace

std::uint64_t study_campaign_seed(std::uint64_t master_seed, unsigned n_pe) { return derive_seed(master_seed, n_pe); }

std::vector<SuccessPoint> StudyResult::curve(std::size_t tau) const {
    std::vector<SuccessPoint> out;
    for (const auto &p : success)
        if (p.tau == tau)
            out.push_back(p);
    std::sort(out.begin(), out.end(), [](const auto &l, const auto &r) { return l.n_pe < r.n_pe; });
    return out;
}

std::vector<SnrPoint> StudyResult::snr_curve(std::size_t tau) const {
    std::vector<SnrPoint> out;
    for (const auto &p : snr)
        if (p.tau == tau)
            out.push_back(p);
    std::sort(out.begin(), out.end(), [](const auto &l, const auto &r) { return l.n_pe < r.n_pe; });
    return out;
}

std::vector<DecayPoint> StudyResult::decay_points(std::size_t tau) const {
    std::map<unsigned, DecayPoint> by_pe;
    for (const auto &p : success)
        if (p.tau == tau)
            by_pe[p.n_pe] = {static_cast<double>(p.n_pe), p.mean_correct, {}};
    for (const auto &o : observations)
        if (o.tau == tau)
            by_pe[o.n_pe].samples.push_back(o.rho_correct);
    std::vector<DecayPoint> out;
    for (auto &[n, p] : by_pe)
        out.push_back(std::move(p));
    return out;
}

StudyResult run_study(const StudyConfig &cfg, const ProgressCallback &progress) {
    if (cfg.n_pe_list.empty() || cfg.taus.empty())
        throw ParameterError("study needs at least one n_pe and one step");
    if (cfg.n_runs < 1)
        throw ParameterError("study needs n_runs >= 1");
    for (auto tau : cfg.taus)
        if (tau >= cfg.n_tau)
            throw ParameterError("step " + std::to_string(tau) + " beyond n_tau = " + std::to_string(cfg.n_tau));
    for (auto n : cfg.n_pe_list)
        if (cfg.target_pe >= n)
            throw ParameterError("target PE " + std::to_string(cfg.target_pe) + " missing from an array of " +
                                 std::to_string(n) + " PEs");

    const unsigned threads = resolve_threads(cfg.threads);
    const std::size_t n_taus = cfg.taus.size();
    StudyResult result;
    std::vector<std::vector<SuccessPoint>> success_by_tau(n_taus);
    std::vector<std::vector<SnrPoint>> snr_by_tau(n_taus);

    for (unsigned n_pe : cfg.n_pe_list) {
        ArrayConfig array = cfg.array;
        array.n_pe = n_pe;
        array.validate();
        const std::uint64_t campaign_seed = study_campaign_seed(cfg.master_seed, n_pe);

        std::vector<Moments> cw(n_taus), inc(n_taus), snr(n_taus);
        std::vector<std::vector<Moments>> per_candidate(n_taus);

        const std::size_t chunk = std::max<std::size_t>(16, 4 * threads);
        for (std::size_t start = 0; start < cfg.n_runs; start += chunk) {
            const std::size_t count = std::min(chunk, cfg.n_runs - start);
            std::vector<RunRecord> records(count);
            parallel_for(count, threads, [&](std::size_t i) {
                const auto run = generate_run(array, cfg.distribution, cfg.n_tau, cfg.n_traces,
                                              run_seed(campaign_seed, start + i));
                records[i] = analyse_run(run, cfg, array);
            });
            // Reduce in run order so sums do not depend on scheduling.
            for (const auto &rec : records) {
                for (std::size_t k = 0; k < n_taus; ++k) {
                    cw[k].add(rec.rho_correct[k]);
                    inc[k].add(rec.best_incorrect[k]);
                    if (!std::isinf(rec.snr[k]))
                        snr[k].add(rec.snr[k]);
                    result.observations.push_back(
                        {n_pe, cfg.taus[k], rec.snr[k], rec.rho_correct[k], rec.best_incorrect[k]});
                    if (!rec.masked.empty()) {
                        auto &pc = per_candidate[k];
                        if (pc.empty())
                            pc.resize(rec.masked[k].size());
                        for (std::size_t c = 0; c < pc.size(); ++c)
                            if (!std::isnan(rec.masked[k][c]))
                                pc[c].add(rec.masked[k][c]);
                    }
                }
            }
            if (progress)
                progress(n_pe, start + count);
        }

        for (std::size_t k = 0; k < n_taus; ++k) {
            SuccessPoint sp;
            sp.n_pe = n_pe;
            sp.tau = cfg.taus[k];
            sp.n_runs = cfg.n_runs;
            sp.mean_correct = cw[k].mean();
            sp.se_correct = cw[k].se();
            if (cfg.aggregation == IncorrectAggregation::MaxThenMean) {
                sp.mean_incorrect = inc[k].mean();
                sp.se_incorrect = inc[k].se();
            } else {
                for (const auto &m : per_candidate[k]) {
                    if (m.n && m.mean() > sp.mean_incorrect) {
                        sp.mean_incorrect = m.mean();
                        sp.se_incorrect = m.se();
                    }
                }
            }
            success_by_tau[k].push_back(sp);

            SnrPoint np;
            np.n_pe = n_pe;
            np.tau = cfg.taus[k];
            np.n_runs = cfg.n_runs;
            if (snr[k].n == 0) {
                np.snr = kInfiniteSnr;
            } else {
                np.snr = snr[k].mean();
                np.se = snr[k].se();
            }
            snr_by_tau[k].push_back(np);
        }
    }
    for (std::size_t k = 0; k < n_taus; ++k) {
        auto &s = success_by_tau[k];
        std::sort(s.begin(), s.end(), [](const auto &l, const auto &r) { return l.n_pe < r.n_pe; });
        result.success.insert(result.success.end(), s.begin(), s.end());
        auto &q = snr_by_tau[k];
        std::sort(q.begin(), q.end(), [](const auto &l, const auto &r) { return l.n_pe < r.n_pe; });
        result.snr.insert(result.snr.end(), q.begin(), q.end());
    }
    return result;
}

} // namespace cpalab
