// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Campaigns run at desk scale.

#include "cpalab/cpa.h"
#include "cpalab/fitting.h"
#include "cpalab/leakage.h"
#include "cpalab/metrics.h"
#include "cpalab/parallel.h"
#include "cpalab/reference.h"
#include "cpalab/study.h"
#include "cpalab/tracegen.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace cpalab;
namespace ref = cpalab::reference;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string &name, Outcome &o) {
    std::printf("criterion %2d %s: %s%s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass)
        ++failures;
}

double rho_at(const std::vector<SuccessPoint> &curve, unsigned n_pe) {
    for (const auto &p : curve)
        if (p.n_pe == n_pe)
            return p.mean_correct;
    return NAN;
}

double snr_at(const std::vector<SnrPoint> &curve, unsigned n_pe) {
    for (const auto &p : curve)
        if (p.n_pe == n_pe)
            return p.snr;
    return NAN;
}

std::vector<unsigned> all_pe() {
    std::vector<unsigned> v(ref::kMaxPe);
    std::iota(v.begin(), v.end(), 1u);
    return v;
}

StudyConfig study_config(const WeightDistribution &dist, std::vector<std::size_t> taus, std::size_t n_runs,
                         std::uint64_t seed, unsigned threads) {
    StudyConfig c;
    c.distribution = dist;
    c.n_tau = ref::kSteps;
    c.n_traces = ref::kTracesPerRun;
    c.n_runs = n_runs;
    c.master_seed = seed;
    c.n_pe_list = all_pe();
    c.taus = std::move(taus);
    c.threads = threads;
    return c;
}

void criterion1(unsigned threads) {
    Outcome o;
    ArrayConfig c;
    const auto camp = generate_campaign(c, UniformWeights{}, ref::kSteps, ref::kTracesPerRun, 50, kSeed, threads);
    double worst = 0.0;
    std::size_t checked = 0, undefined = 0;
    for (const auto &run : camp.runs)
        for (std::size_t tau = 0; tau < ref::kSteps; ++tau) {
            const auto res = attack(run, default_space(run, tau, c), tau, c, {0, 0, threads});
            if (res.target_undefined()) {
                ++undefined;
                continue;
            }
            worst = std::max(worst, std::abs(*res.target_rho() - 1.0));
            ++checked;
        }
    o.detail << " max |rho-1| = " << worst << " over " << checked << " (run, tau) pairs, " << undefined
             << " skipped with constant leakage (zero weight)";
    o.require(checked > 0 && worst <= 1e-9, "|rho| = 1 within 1e-9");
    report(1, "single-PE perfect correlation", o);
}

void criterion2(unsigned threads) {
    Outcome o;
    CrossPeOptions opts;
    opts.n_traces = ref::kTracesPerRun;
    opts.seed = derive_seed(kSeed, 1000);
    opts.threads = threads;
    const auto res = cross_pe_dependence(0, ref::kDesk.n_runs, ArrayConfig{}, opts);
    o.detail << " max |rho| = " << res.max_abs_rho << " (witness " << res.witness_max << ", sampled "
             << res.sampled_max << ")";
    o.require(std::abs(res.max_abs_rho - 1.0) <= 1e-9, "cross-PE dependence at tau=0 equals 1 within 1e-9");
    report(2, "tau=0 cross-PE dependence", o);
}

std::optional<DecayFit> try_fit(const StudyResult &s, std::size_t tau, Outcome &o) {
    try {
        return fit_decay(s.decay_points(tau));
    } catch (const std::exception &e) {
        o.detail << " tau=" << tau << " fit error: " << e.what() << ";";
        o.require(false, "fit at tau=" + std::to_string(tau));
        return std::nullopt;
    }
}

void check_fit(Outcome &o, std::size_t tau, const DecayFit &f, bool check_sigma) {
    const auto &r = ref::decay(tau);
    const auto tol = ref::kDesk;
    const std::string t = "tau=" + std::to_string(tau);
    o.detail << " " << t << " (a,b,c)=(" << f.a << "," << f.b << "," << f.c << ") sigma=" << f.residual_sigma
             << " ref=(" << r.a << "," << r.b << "," << r.c << ");";
    o.require(std::abs(f.a - r.a) <= tol.coefficient, "a " + t);
    o.require(std::abs(f.b - r.b) <= tol.coefficient, "b " + t);
    o.require(std::abs(f.c - r.c) <= tol.coefficient, "c " + t);
    if (check_sigma)
        o.require(f.residual_sigma <= tol.residual_sigma, "residual_sigma " + t);
}

void criterion3(const StudyResult &s) {
    Outcome o;
    for (std::size_t tau : {0, 3, 7})
        if (const auto f = try_fit(s, tau, o))
            check_fit(o, tau, *f, true);
    report(3, "decay-law coefficients at tau 0, 3, 7", o);
}

void criterion4(const StudyResult &s) {
    Outcome o;
    for (std::size_t tau = 0; tau < ref::kSteps; ++tau)
        if (const auto f = try_fit(s, tau, o))
            check_fit(o, tau, *f, false);
    report(4, "decay-law table for all eight steps", o);
}

void criterion5(const StudyResult &s) {
    Outcome o;
    for (std::size_t tau : {0, 3, 7}) {
        const auto cp = crossing_point(s.curve(tau));
        const unsigned target = tau == 0 ? ref::kCrossingTau0 : ref::kCrossingLater;
        const unsigned tol = tau == 0 ? ref::kCrossingTau0Tolerance : ref::kCrossingLaterTolerance;
        o.detail << " tau=" << tau << " n_pe*=" << (cp.n_pe_star ? std::to_string(*cp.n_pe_star) : "none")
                 << " (expected " << target << "+-" << tol << ");";
        o.require(cp.n_pe_star && *cp.n_pe_star + tol >= target && *cp.n_pe_star <= target + tol,
                  "crossing at tau=" + std::to_string(tau));
    }
    report(5, "crossing points", o);
}

void criterion6(const StudyResult &s) {
    Outcome o;
    const auto curve = correlation_vs_snr(s.observations);
    const double mean = curve.threshold_mean.value_or(NAN);
    const double worst = curve.threshold_worst.value_or(NAN);
    o.detail << " mean threshold=" << mean << " (expected " << ref::kSnrThreshold << "+-"
             << ref::kSnrThresholdTolerance << "); worst=" << worst << " (expected in [" << ref::kSnrWorstLow
             << ", " << ref::kSnrWorstHigh << "])";
    o.require(std::abs(mean - ref::kSnrThreshold) <= ref::kSnrThresholdTolerance, "mean threshold");
    o.require(worst >= ref::kSnrWorstLow && worst <= ref::kSnrWorstHigh, "worst-case threshold");
    report(6, "SNR threshold", o);
}

void criterion7(const StudyResult &s) {
    Outcome o;
    for (std::size_t tau : {0, 7}) {
        const auto curve = s.snr_curve(tau);
        const std::string t = "tau=" + std::to_string(tau);
        unsigned first_rise = 0;
        for (std::size_t i = 1; i < curve.size() && !first_rise; ++i) {
            const auto &prev = curve[i - 1], &cur = curve[i];
            if (prev.infinite())
                continue;
            if (cur.infinite() || cur.snr > prev.snr + 2.0 * std::hypot(prev.se, cur.se))
                first_rise = cur.n_pe;
        }
        const double s17 = snr_at(curve, 17);
        o.detail << " " << t << " snr(1)=" << snr_at(curve, 1) << " snr(2)=" << snr_at(curve, 2)
                 << " snr(3)=" << snr_at(curve, 3) << " snr(17)=" << s17;
        if (first_rise)
            o.detail << " rises at n_pe=" << first_rise;
        o.detail << ";";
        o.require(!first_rise, "snr non-increasing within 2 se, " + t);
        o.require(s17 < ref::kSnrAt17Max, "snr(17) < " + std::to_string(ref::kSnrAt17Max) + ", " + t);
    }
    report(7, "SNR decay", o);
}

void criterion8(const StudyResult &s) {
    Outcome o;
    for (std::size_t tau = 0; tau < ref::kSteps; ++tau) {
        const auto curve = s.curve(tau);
        const double d = std::abs(rho_at(curve, 30) - rho_at(curve, 32));
        o.detail << " tau=" << tau << " |rho30-rho32|=" << d << ";";
        o.require(d < ref::kSaturationTolerance, "saturation at tau=" + std::to_string(tau));
    }
    report(8, "saturation", o);
}

void criterion9(const StudyResult &uniform, const StudyResult &normal) {
    Outcome o;
    for (std::size_t tau : {0, 3, 7}) {
        const auto u = uniform.curve(tau), n = normal.curve(tau);
        double worst = 0.0;
        unsigned at = 0;
        for (std::size_t i = 0; i < u.size() && i < n.size(); ++i) {
            const double d = std::abs(u[i].mean_correct - n[i].mean_correct);
            if (d > worst) {
                worst = d;
                at = u[i].n_pe;
            }
        }
        o.detail << " tau=" << tau << " max diff=" << worst << " at n_pe=" << at << ";";
        o.require(u.size() == n.size() && worst <= ref::kDistributionTolerance,
                  "normal vs uniform at tau=" + std::to_string(tau));
    }
    report(9, "normal-weight equivalence", o);
}

double two_pass(const std::vector<double> &h, const std::vector<double> &p) {
    const double mh = std::accumulate(h.begin(), h.end(), 0.0) / h.size();
    const double mp = std::accumulate(p.begin(), p.end(), 0.0) / p.size();
    double shp = 0.0, shh = 0.0, spp = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        shp += (h[i] - mh) * (p[i] - mp);
        shh += (h[i] - mh) * (h[i] - mh);
        spp += (p[i] - mp) * (p[i] - mp);
    }
    return shp / std::sqrt(shh * spp);
}

void criterion10(unsigned threads) {
    Outcome o;

    Rng rng(derive_seed(kSeed, 10));
    double pearson_err = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> h(64), p(64);
        for (std::size_t i = 0; i < h.size(); ++i) {
            h[i] = static_cast<double>(rng.uniform_int(0, 32));
            p[i] = 0.3 * h[i] + 5.0 * rng.normal();
        }
        pearson_err = std::max(pearson_err, std::abs(pearson(h, p).value_or(NAN) - two_pass(h, p)));
    }
    o.detail << " pearson err=" << pearson_err << ";";
    o.require(pearson_err <= 1e-12, "pearson vs two-pass oracle");

    double exact = 0.0;
    for (int w = -128; w <= 127; ++w)
        for (int x = -128; x <= 127; ++x)
            exact += hamming_weight(w * x).value;
    exact /= 65536.0;
    const auto camp = generate_campaign({}, UniformWeights{}, 1, 200, 400, derive_seed(kSeed, 11), threads);
    std::vector<double> means;
    for (const auto &run : camp.runs) {
        double s = 0.0;
        for (std::size_t t = 0; t < run.n_traces(); ++t)
            s += run.samples(t, 0);
        means.push_back(s / run.n_traces());
    }
    const double m = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double var = 0.0;
    for (double v : means)
        var += (v - m) * (v - m);
    const double se = std::sqrt(var / (means.size() - 1) / means.size());
    o.detail << " tau=0 mean=" << m << " exhaustive=" << exact << " se=" << se << ";";
    o.require(std::abs(m - exact) <= 3.0 * se, "tau=0 expectation within 3 se");

    ArrayConfig four;
    four.n_pe = 4;
    const auto run = generate_run(four, UniformWeights{}, ref::kSteps, 500, derive_seed(kSeed, 12));
    bool exact_sum = true;
    std::vector<Matrix<std::uint8_t>> per_pe;
    for (std::size_t pe = 0; pe < four.n_pe; ++pe)
        per_pe.push_back(pe_leakage(run.weights.row(pe), run.inputs, ArrayConfig{}));
    for (std::size_t t = 0; t < run.n_traces(); ++t)
        for (std::size_t tau = 0; tau < ref::kSteps; ++tau) {
            unsigned sum = 0;
            for (const auto &l : per_pe)
                sum += l(t, tau);
            exact_sum = exact_sum && run.samples(t, tau) == static_cast<float>(sum);
        }
    o.require(exact_sum, "superposition of per-PE traces");

    double round_trip = 0.0;
    for (std::size_t tau = 0; tau < ref::kSteps; ++tau) {
        const auto &r = ref::decay(tau);
        DecayFit truth{r.a, r.b, r.c};
        std::vector<DecayPoint> pts;
        for (unsigned n = 1; n <= ref::kMaxPe; ++n)
            pts.push_back({double(n), evaluate_decay(truth, n), {}});
        const auto f = fit_decay(pts);
        round_trip = std::max({round_trip, std::abs(f.a - r.a), std::abs(f.b - r.b), std::abs(f.c - r.c)});
    }
    o.detail << " fit round-trip err=" << round_trip << ";";
    o.require(round_trip <= 1e-6, "fit round-trip");

    const auto dir = std::filesystem::temp_directory_path() / "cpalab_acceptance";
    std::filesystem::create_directories(dir);
    ArrayConfig three;
    three.n_pe = 3;
    three.noise_sigma = 1.5;
    const auto saved = generate_campaign(three, UniformWeights{}, ref::kSteps, 300, 3, derive_seed(kSeed, 13));
    save_campaign(saved, dir / "c.cpat");
    const bool bit_exact = load_campaign(dir / "c.cpat") == saved;
    std::filesystem::remove_all(dir);
    o.require(bit_exact, "trace-file round-trip");

    report(10, "oracle equivalences", o);
}

} // namespace

int main(int argc, char **argv) {
    std::size_t n_runs = ref::kDesk.n_runs;
    if (argc > 1)
        n_runs = std::strtoull(argv[1], nullptr, 10);
    const unsigned threads = resolve_threads(0);
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    std::printf("acceptance: %zu runs per point, %u thread(s)\n", n_runs, threads);

    criterion1(threads);
    criterion2(threads);

    std::vector<std::size_t> taus(ref::kSteps);
    std::iota(taus.begin(), taus.end(), std::size_t{0});
    const auto uniform = run_study(study_config(UniformWeights{}, taus, n_runs, kSeed, threads));
    std::printf("uniform study done after %.0f s\n", elapsed());
    criterion3(uniform);
    criterion4(uniform);
    criterion5(uniform);
    criterion6(uniform);
    criterion7(uniform);
    criterion8(uniform);

    const auto normal = run_study(
        study_config(NormalWeights{ref::kNormalWeightSigma}, {0, 3, 7}, n_runs, derive_seed(kSeed, 0xA), threads));
    std::printf("normal study done after %.0f s\n", elapsed());
    criterion9(uniform, normal);

    criterion10(threads);
    std::printf("acceptance: %d criterion(s) failed, %.0f s\n", failures, elapsed());
    return failures == 0 ? 0 : 1;
}
