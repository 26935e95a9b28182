#include "cpalab/experiment.h"

#include "cpalab/csv.h"
#include "cpalab/error.h"
#include "cpalab/json_io.h"
#include "cpalab/parallel.h"
#include "cpalab/reference.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unistd.h>

namespace cpalab {

using nlohmann::json;
namespace fs = std::filesystem;
namespace ref = reference;

namespace {

std::string join(const std::vector<std::string> &items, const std::string &sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? sep : "") + items[i];
    return out;
}

std::vector<unsigned> pe_range(unsigned lo, unsigned hi) {
    std::vector<unsigned> v(hi - lo + 1);
    std::iota(v.begin(), v.end(), lo);
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

std::string to_string(IncorrectAggregation a) {
    return a == IncorrectAggregation::MaxThenMean ? "max_then_mean" : "mean_then_max";
}

IncorrectAggregation aggregation_from_string(const std::string &s) {
    if (s == "max_then_mean")
        return IncorrectAggregation::MaxThenMean;
    if (s == "mean_then_max")
        return IncorrectAggregation::MeanThenMax;
    throw ValidationError("aggregation must be max_then_mean or mean_then_max, got '" + s + "'");
}

Scale scale_from_string(const std::string &s) {
    if (s == "desk")
        return Scale::Desk;
    if (s == "full")
        return Scale::Full;
    throw ParameterError("scale must be desk or full, got '" + s + "'");
}

std::string to_string(Scale s) { return s == Scale::Desk ? "desk" : "full"; }

std::size_t scale_runs(Scale s) { return s == Scale::Desk ? ref::kDesk.n_runs : ref::kFull.n_runs; }

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    try {
        array.validate();
    } catch (const ValidationError &e) {
        errors.emplace_back(e.what());
    }
    if (n_tau < 1)
        errors.emplace_back("n_tau: must be >= 1");
    if (n_traces < 2)
        errors.emplace_back("n_traces: must be >= 2, got " + std::to_string(n_traces));
    if (n_runs < 1)
        errors.emplace_back("n_runs: must be >= 1");
    for (std::size_t i = 0; i < taus.size(); ++i)
        if (taus[i] >= n_tau)
            errors.push_back("taus[" + std::to_string(i) + "]: step " + std::to_string(taus[i]) +
                             " beyond n_tau = " + std::to_string(n_tau));
    for (std::size_t i = 0; i < n_pe_list.size(); ++i) {
        if (n_pe_list[i] < 1)
            errors.push_back("n_pe[" + std::to_string(i) + "]: must be >= 1");
        else if (target_pe >= n_pe_list[i])
            errors.push_back("target_pe: " + std::to_string(target_pe) + " missing from an array of " +
                             std::to_string(n_pe_list[i]) + " PEs");
    }
    if (n_pe_list.empty() && array.n_pe >= 1 && target_pe >= array.n_pe)
        errors.push_back("target_pe: " + std::to_string(target_pe) + " missing from an array of " +
                         std::to_string(array.n_pe) + " PEs");
    if (!errors.empty())
        throw ValidationError("invalid experiment config:\n  " + join(errors, "\n  "));
}

StudyConfig ExperimentConfig::study(unsigned threads) const {
    validate();
    StudyConfig s;
    s.array = array;
    s.distribution = distribution;
    s.n_tau = n_tau;
    s.n_traces = n_traces;
    s.n_runs = n_runs;
    s.master_seed = seed;
    s.n_pe_list = n_pe_list.empty() ? std::vector<unsigned>{array.n_pe} : n_pe_list;
    s.taus = taus;
    if (s.taus.empty()) {
        s.taus.resize(n_tau);
        std::iota(s.taus.begin(), s.taus.end(), std::size_t{0});
    }
    s.target_pe = target_pe;
    s.aggregation = aggregation;
    s.threads = threads;
    return s;
}

json to_json(const ExperimentConfig &c) {
    json j;
    j["array"] = to_json(c.array);
    j["distribution"] = to_json(c.distribution);
    j["n_tau"] = c.n_tau;
    j["n_traces"] = c.n_traces;
    j["n_runs"] = c.n_runs;
    j["seed"] = c.seed;
    j["taus"] = c.taus;
    j["n_pe"] = c.n_pe_list;
    j["target_pe"] = c.target_pe;
    j["aggregation"] = to_string(c.aggregation);
    j["out"] = c.out.string();
    return j;
}

ExperimentConfig experiment_from_json(const json &j) {
    if (!j.is_object())
        throw ValidationError("experiment config must be a JSON object");
    ExperimentConfig c;
    std::vector<std::string> errors;
    auto count = [&](const std::string &key, const json &v) -> std::size_t {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ValidationError(key + ": expected a non-negative integer, got " + v.dump());
        return v.get<std::size_t>();
    };
    for (const auto &[key, value] : j.items()) {
        try {
            if (key == "array")
                c.array = array_config_from_json(value);
            else if (key == "distribution")
                c.distribution = distribution_from_json(value);
            else if (key == "n_tau")
                c.n_tau = count(key, value);
            else if (key == "n_traces")
                c.n_traces = count(key, value);
            else if (key == "n_runs")
                c.n_runs = count(key, value);
            else if (key == "seed")
                c.seed = value.get<std::uint64_t>();
            else if (key == "target_pe")
                c.target_pe = count(key, value);
            else if (key == "aggregation")
                c.aggregation = aggregation_from_string(value.get<std::string>());
            else if (key == "out")
                c.out = value.get<std::string>();
            else if (key == "taus") {
                if (!value.is_array())
                    throw ValidationError("taus: expected a list of steps");
                for (const auto &t : value)
                    c.taus.push_back(count(key, t));
            } else if (key == "n_pe") {
                // A single count sets the array size; a list makes a sweep.
                if (value.is_array()) {
                    for (const auto &n : value)
                        c.n_pe_list.push_back(static_cast<unsigned>(count(key, n)));
                } else {
                    c.array.n_pe = static_cast<unsigned>(count(key, value));
                }
            } else {
                throw ValidationError("unknown field '" + key + "'");
            }
        } catch (const ValidationError &e) {
            errors.emplace_back(e.what());
        } catch (const json::exception &e) {
            errors.push_back(key + ": " + e.what());
        } catch (const Error &e) {
            errors.push_back(key + ": " + e.what());
        }
    }
    if (!errors.empty())
        throw ValidationError("invalid experiment config:\n  " + join(errors, "\n  "));
    c.validate();
    return c;
}

ExperimentConfig load_experiment(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return experiment_from_json(j);
}

// ---------------------------------------------------------------------------
// Output directory

OutputLock::OutputLock(const fs::path &dir, bool force) : dir_(dir), lock_(dir / ".cpalab.lock") {
    fs::create_directories(dir_);
    if (fs::exists(lock_))
        throw Error("output directory " + dir_.string() + " is locked by another run (remove " + lock_.string() +
                    " if that run is gone)");
    if (!force) {
        for (const auto &entry : fs::directory_iterator(dir_)) {
            (void)entry;
            throw Error("output directory " + dir_.string() + " is not empty; pass --force to overwrite");
        }
    }
    // "x" fails if another process created the lock in the meantime.
    std::FILE *f = std::fopen(lock_.c_str(), "wx");
    if (!f)
        throw Error("cannot lock output directory " + dir_.string());
    std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
    std::fclose(f);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(lock_, ec);
}

// ---------------------------------------------------------------------------
// Reproduction

bool Report::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.pass; });
}

namespace {

std::string fmt(double v) { return format_number(v); }

Check within(const std::string &name, double value, double target, double tol) {
    return {name, value, fmt(target) + " +- " + fmt(tol), std::isfinite(value) && std::abs(value - target) <= tol};
}

Check below(const std::string &name, double value, double limit) {
    return {name, value, "< " + fmt(limit), value < limit};
}

Check at_most(const std::string &name, double value, double limit) {
    return {name, value, "<= " + fmt(limit), value <= limit};
}

struct Context {
    const fs::path &out;
    const ReproduceOptions &opts;
    std::size_t n_runs;
    std::optional<StudyResult> uniform;
    std::optional<StudyResult> normal;

    StudyConfig base(const WeightDistribution &dist, std::vector<std::size_t> taus) const {
        StudyConfig s;
        s.array = opts.array;
        s.distribution = dist;
        s.n_tau = ref::kSteps;
        s.n_traces = ref::kTracesPerRun;
        s.n_runs = n_runs;
        s.master_seed = opts.seed;
        s.n_pe_list = pe_range(1, ref::kMaxPe);
        s.taus = std::move(taus);
        s.aggregation = opts.aggregation;
        s.threads = opts.threads;
        return s;
    }

    const StudyResult &uniform_study() {
        if (!uniform)
            uniform = run_study(base(UniformWeights{}, {0, 1, 2, 3, 4, 5, 6, 7}), opts.progress);
        return *uniform;
    }

    const StudyResult &normal_study() {
        if (!normal)
            normal = run_study(base(NormalWeights{ref::kNormalWeightSigma}, {0, 3, 7}), opts.progress);
        return *normal;
    }

    fs::path file(Report &r, const std::string &name) {
        r.files.push_back(out / name);
        return out / name;
    }
};

void write_curve(const fs::path &path, const std::vector<SuccessPoint> &curve) {
    CsvWriter w(path, {"n_pe", "rho", "se", "best_incorrect", "se_incorrect", "n_runs"});
    for (const auto &p : curve) {
        w.cell(p.n_pe).cell(p.mean_correct).cell(p.se_correct).cell(p.mean_incorrect).cell(p.se_incorrect).cell(
            p.n_runs);
        w.end_row();
    }
}

std::optional<DecayFit> try_fit(const StudyResult &s, std::size_t tau, std::string &error) {
    try {
        auto fit = fit_decay(s.decay_points(tau));
        fit.tau = tau;
        return fit;
    } catch (const Error &e) {
        error = e.what();
        return std::nullopt;
    }
}

double coefficient_deviation(const DecayFit &f, const ref::DecayCoefficients &r) {
    return std::max({std::abs(f.a - r.a), std::abs(f.b - r.b), std::abs(f.c - r.c)});
}

std::string crossing_text(const std::optional<unsigned> &n) { return n ? std::to_string(*n) : "none"; }

void write_fits(const fs::path &path, const std::vector<std::pair<std::size_t, std::optional<DecayFit>>> &fits,
                const StudyResult &s) {
    CsvWriter w(path, {"tau", "a", "b", "c", "residual_sigma", "run_level_sigma", "ref_a", "ref_b", "ref_c",
                       "ref_sigma", "crossing"});
    for (const auto &[tau, fit] : fits) {
        const auto &r = ref::decay(tau);
        const auto cp = crossing_point(s.curve(tau));
        w.cell(tau);
        if (fit)
            w.cell(fit->a).cell(fit->b).cell(fit->c).cell(fit->residual_sigma).cell(fit->run_level_sigma.value_or(NAN));
        else
            w.cell("").cell("").cell("").cell("").cell("");
        w.cell(r.a).cell(r.b).cell(r.c).cell(r.sigma).cell(crossing_text(cp.n_pe_star));
        w.end_row();
    }
}

const ref::ScaleTolerance &tolerance(Scale s) { return s == Scale::Desk ? ref::kDesk : ref::kFull; }

bool snr_monotone(const std::vector<SnrPoint> &curve) {
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const auto &prev = curve[i - 1], &cur = curve[i];
        if (prev.infinite())
            continue;
        if (cur.infinite())
            return false;
        if (cur.snr > prev.snr + 2.0 * std::hypot(prev.se, cur.se))
            return false;
    }
    return true;
}

double snr_at(const std::vector<SnrPoint> &curve, unsigned n_pe) {
    for (const auto &p : curve)
        if (p.n_pe == n_pe)
            return p.snr;
    return NAN;
}

double rho_at(const std::vector<SuccessPoint> &curve, unsigned n_pe) {
    for (const auto &p : curve)
        if (p.n_pe == n_pe)
            return p.mean_correct;
    return NAN;
}

Report fig2(Context &ctx) {
    Report r{"fig2", {}, {}};
    const auto &s = ctx.uniform_study();
    CsvWriter w(ctx.file(r, "fig2_snr.csv"), {"tau", "n_pe", "snr", "se", "n_runs"});
    for (std::size_t tau : {std::size_t{0}, std::size_t{7}}) {
        const auto curve = s.snr_curve(tau);
        for (const auto &p : curve) {
            w.cell(tau).cell(p.n_pe).cell(p.snr).cell(p.se).cell(p.n_runs);
            w.end_row();
        }
        const std::string t = "tau=" + std::to_string(tau);
        r.checks.push_back({"snr infinite at n_pe=1, " + t, snr_at(curve, 1), "inf", std::isinf(snr_at(curve, 1))});
        const double s2 = snr_at(curve, 2), s4 = snr_at(curve, 4), s8 = snr_at(curve, 8);
        r.checks.push_back({"snr(2) > snr(4) > snr(8), " + t, s2 - s8, "strictly decreasing", s2 > s4 && s4 > s8});
        r.checks.push_back(
            {"snr non-increasing in n_pe within 2 se, " + t, 0.0, "monotone", snr_monotone(curve)});
        r.checks.push_back(below("snr at n_pe=17, " + t, snr_at(curve, 17), ref::kSnrAt17Max));
    }
    r.checks.push_back(below("snr at n_pe=32, tau=7", snr_at(s.snr_curve(7), 32), ref::kSnrAt32Max));
    return r;
}

Report fig3(Context &ctx) {
    Report r{"fig3", {}, {}};
    CsvWriter w(ctx.file(r, "fig3_cross_pe.csv"), {"tau", "max_abs_rho", "sampled_max", "witness_max", "n_runs"});
    ArrayConfig array = ctx.opts.array;
    array.n_pe = 1;
    std::vector<double> max_rho;
    for (std::size_t tau = 0; tau <= 10; ++tau) {
        CrossPeOptions o;
        o.n_traces = ref::kTracesPerRun;
        o.seed = derive_seed(ctx.opts.seed, 1000 + tau);
        o.threads = resolve_threads(ctx.opts.threads);
        const auto res = cross_pe_dependence(tau, ctx.n_runs, array, o);
        w.cell(tau).cell(res.max_abs_rho).cell(res.sampled_max).cell(res.witness_max).cell(res.n_runs);
        w.end_row();
        max_rho.push_back(res.max_abs_rho);
    }
    r.checks.push_back(within("max |rho| at tau=0", max_rho[0], 1.0, 1e-9));
    r.checks.push_back(below("max |rho| at tau=7 relative to tau=0", max_rho[7] - max_rho[0], 0.0));
    const auto [lo, hi] = std::minmax({max_rho[8], max_rho[9], max_rho[10]});
    r.checks.push_back(at_most("spread of max |rho| over tau=8..10", hi - lo, ref::kCrossPeStagnation));
    return r;
}

Report fig4(Context &ctx) {
    Report r{"fig4", {}, {}};
    const auto &s = ctx.uniform_study();
    const auto &tol = tolerance(ctx.opts.scale);
    std::vector<std::pair<std::size_t, std::optional<DecayFit>>> fits;
    for (std::size_t tau : {std::size_t{0}, std::size_t{3}, std::size_t{7}}) {
        const auto curve = s.curve(tau);
        write_curve(ctx.file(r, "fig4_tau" + std::to_string(tau) + ".csv"), curve);
        const std::string t = "tau=" + std::to_string(tau);
        std::string err;
        const auto fit = try_fit(s, tau, err);
        fits.emplace_back(tau, fit);
        const auto &ref_fit = ref::decay(tau);
        if (fit) {
            r.checks.push_back(within("fit a, " + t, fit->a, ref_fit.a, tol.coefficient));
            r.checks.push_back(within("fit b, " + t, fit->b, ref_fit.b, tol.coefficient));
            r.checks.push_back(within("fit c, " + t, fit->c, ref_fit.c, tol.coefficient));
            r.checks.push_back(at_most("residual sigma, " + t, fit->residual_sigma, tol.residual_sigma));
        } else {
            r.checks.push_back({"fit, " + t + " (" + err + ")", NAN, "converged fit", false});
        }
        const auto cp = crossing_point(curve);
        const unsigned target = tau == 0 ? ref::kCrossingTau0 : ref::kCrossingLater;
        const unsigned ctol = tau == 0 ? ref::kCrossingTau0Tolerance : ref::kCrossingLaterTolerance;
        r.checks.push_back(within("crossing n_pe, " + t, cp.n_pe_star ? *cp.n_pe_star : NAN, target, ctol));
        const double d = std::abs(rho_at(curve, 30) - rho_at(curve, 32));
        r.checks.push_back(below("|rho(30) - rho(32)|, " + t, d, ref::kSaturationTolerance));
    }
    write_fits(ctx.file(r, "fig4_fits.csv"), fits, s);
    return r;
}

Report fig5(Context &ctx) {
    Report r{"fig5", {}, {}};
    const auto &s = ctx.uniform_study();
    const auto curve = correlation_vs_snr(s.observations);
    {
        CsvWriter w(ctx.file(r, "fig5_bins.csv"), {"snr_lo", "snr_hi", "snr_center", "count", "rho", "se",
                                                    "best_incorrect", "envelope_min", "envelope_max"});
        for (const auto &b : curve.bins) {
            w.cell(b.lo).cell(b.hi).cell(b.center).cell(b.count).cell(b.mean_correct).cell(b.se_correct).cell(
                b.mean_incorrect);
            w.cell(b.envelope_min).cell(b.envelope_max);
            w.end_row();
        }
    }
    {
        CsvWriter w(ctx.file(r, "fig5_thresholds.csv"), {"curve", "snr_threshold"});
        w.cell("mean").cell(curve.threshold_mean.value_or(NAN));
        w.end_row();
        w.cell("worst").cell(curve.threshold_worst.value_or(NAN));
        w.end_row();
        for (const auto &[tau, t] : curve.threshold_per_tau) {
            w.cell("tau" + std::to_string(tau)).cell(t.value_or(NAN));
            w.end_row();
        }
    }
    r.checks.push_back(within("mean-curve snr threshold", curve.threshold_mean.value_or(NAN), ref::kSnrThreshold,
                              ref::kSnrThresholdTolerance));
    const double worst = curve.threshold_worst.value_or(NAN);
    r.checks.push_back({"worst-case snr threshold", worst,
                        "[" + fmt(ref::kSnrWorstLow) + ", " + fmt(ref::kSnrWorstHigh) + "]",
                        worst >= ref::kSnrWorstLow && worst <= ref::kSnrWorstHigh});
    bool monotone = true;
    for (std::size_t i = 1; i < curve.bins.size(); ++i) {
        const auto &a = curve.bins[i - 1], &b = curve.bins[i];
        if (b.mean_correct < a.mean_correct - 2.0 * std::hypot(a.se_correct, b.se_correct))
            monotone = false;
    }
    r.checks.push_back({"mean rho non-decreasing in snr within 2 se", 0.0, "monotone", monotone});
    return r;
}

Report appendix_a(Context &ctx) {
    Report r{"appendixA", {}, {}};
    const auto &u = ctx.uniform_study();
    const auto &n = ctx.normal_study();
    for (std::size_t tau : {std::size_t{0}, std::size_t{3}, std::size_t{7}}) {
        const auto cu = u.curve(tau), cn = n.curve(tau);
        CsvWriter w(ctx.file(r, "appendixA_tau" + std::to_string(tau) + ".csv"),
                    {"n_pe", "rho_normal", "rho_uniform", "diff", "best_incorrect_normal"});
        double worst = 0.0;
        for (std::size_t i = 0; i < cn.size(); ++i) {
            const double d = cn[i].mean_correct - cu[i].mean_correct;
            worst = std::max(worst, std::abs(d));
            w.cell(cn[i].n_pe).cell(cn[i].mean_correct).cell(cu[i].mean_correct).cell(d).cell(cn[i].mean_incorrect);
            w.end_row();
        }
        r.checks.push_back(at_most("max |rho_normal - rho_uniform|, tau=" + std::to_string(tau), worst,
                                   ref::kDistributionTolerance));
    }
    return r;
}

Report appendix_b(Context &ctx) {
    Report r{"appendixB", {}, {}};
    const auto &s = ctx.uniform_study();
    const auto &tol = tolerance(ctx.opts.scale);
    std::vector<std::pair<std::size_t, std::optional<DecayFit>>> fits;
    double worst_sigma = 0.0;
    bool all_fit = true;
    for (std::size_t tau = 0; tau < ref::kSteps; ++tau) {
        std::string err;
        const auto fit = try_fit(s, tau, err);
        fits.emplace_back(tau, fit);
        const std::string t = "tau=" + std::to_string(tau);
        if (!fit) {
            all_fit = false;
            r.checks.push_back({"fit, " + t + " (" + err + ")", NAN, "converged fit", false});
            continue;
        }
        worst_sigma = std::max(worst_sigma, fit->residual_sigma);
        r.checks.push_back(
            at_most("max coefficient deviation, " + t, coefficient_deviation(*fit, ref::decay(tau)), tol.coefficient));
    }
    write_fits(ctx.file(r, "appendixB_fits.csv"), fits, s);
    r.checks.push_back(at_most("largest residual sigma over tau=0..7", all_fit ? worst_sigma : NAN,
                               ref::kMaxReportedSigma + 0.01));
    return r;
}

fs::path synthetic_weight_file(Context &ctx, Report &r) {
    const fs::path path = ctx.file(r, "appendixC_weights.txt");
    ArrayConfig array = ctx.opts.array;
    array.n_pe = ref::kMaxPe;
    Rng rng(derive_seed(ctx.opts.seed, 0xC));
    const auto w = sample_weights(NormalWeights{ref::kNormalWeightSigma}, array, ref::kSteps, rng);
    std::ofstream f(path);
    f << "# one row per PE, one column per step\n";
    for (std::size_t pe = 0; pe < w.rows(); ++pe) {
        const auto row = w.row(pe);
        for (std::size_t k = 0; k < row.size(); ++k)
            f << (k ? " " : "") << row[k];
        f << '\n';
    }
    return path;
}

Report appendix_c(Context &ctx) {
    Report r{"appendixC", {}, {}};
    const fs::path weights = ctx.opts.weights ? *ctx.opts.weights : synthetic_weight_file(ctx, r);
    auto cfg = ctx.base(FileWeights{weights}, {1, 7});
    const auto s = run_study(cfg, ctx.opts.progress);
    for (std::size_t tau : {std::size_t{1}, std::size_t{7}}) {
        const auto curve = s.curve(tau);
        write_curve(ctx.file(r, "appendixC_tau" + std::to_string(tau) + ".csv"), curve);
        const std::string t = "tau=" + std::to_string(tau);
        r.checks.push_back(within("rho at n_pe=1, " + t, rho_at(curve, 1), 1.0, 1e-9));
        r.checks.push_back(below("rho(32) - rho(1), " + t, rho_at(curve, 32) - rho_at(curve, 1), 0.0));
    }
    return r;
}

} // namespace

std::vector<Report> reproduce(const std::vector<std::string> &figures, const fs::path &out,
                              const ReproduceOptions &options) {
    for (const auto &f : figures)
        if (std::find(kFigures.begin(), kFigures.end(), f) == kFigures.end())
            throw ParameterError("unknown figure '" + f + "'; expected one of " + join(kFigures, ", "));
    options.array.validate();
    Context ctx{out, options, options.n_runs.value_or(scale_runs(options.scale)), {}, {}};
    std::vector<Report> reports;
    for (const auto &f : figures) {
        if (f == "fig2")
            reports.push_back(fig2(ctx));
        else if (f == "fig3")
            reports.push_back(fig3(ctx));
        else if (f == "fig4")
            reports.push_back(fig4(ctx));
        else if (f == "fig5")
            reports.push_back(fig5(ctx));
        else if (f == "appendixA")
            reports.push_back(appendix_a(ctx));
        else if (f == "appendixB")
            reports.push_back(appendix_b(ctx));
        else
            reports.push_back(appendix_c(ctx));
    }
    return reports;
}

std::string write_reports(const std::vector<Report> &reports, const fs::path &out) {
    json j = json::array();
    std::ostringstream text;
    for (const auto &r : reports) {
        json checks = json::array();
        text << r.figure << ": " << (r.passed() ? "PASS" : "FAIL") << '\n';
        for (const auto &c : r.checks) {
            checks.push_back({{"name", c.name},
                              {"value", format_number(c.value)},
                              {"expected", c.expected},
                              {"pass", c.pass}});
            text << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << ": " << format_number(c.value)
                 << " (expected " << c.expected << ")\n";
        }
        json files = json::array();
        for (const auto &f : r.files)
            files.push_back(f.filename().string());
        j.push_back({{"figure", r.figure}, {"pass", r.passed()}, {"checks", checks}, {"files", files}});
    }
    std::ofstream(out / "report.json") << j.dump(2) << '\n';
    std::ofstream(out / "report.txt") << text.str();
    return text.str();
}

} // namespace cpalab
