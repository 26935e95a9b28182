// cpalab command-line front end.

#include "cpalab/csv.h"
#include "cpalab/error.h"
#include "cpalab/experiment.h"
#include "cpalab/json_io.h"
#include "cpalab/metrics.h"
#include "cpalab/parallel.h"
#include "cpalab/tracegen.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cpalab;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitError = 3;

std::string tuple_text(const std::vector<std::int32_t> &w) {
    std::string s = "(";
    for (std::size_t i = 0; i < w.size(); ++i)
        s += (i ? "," : "") + std::to_string(w[i]);
    return s + ")";
}

std::vector<std::int32_t> parse_list(const std::string &text) {
    std::vector<std::int32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (item.empty() || used != item.size())
            throw ParameterError("not an integer list: '" + text + "'");
        out.push_back(static_cast<std::int32_t>(v));
    }
    return out;
}

WeightDistribution distribution_from_flag(const std::string &s, double sigma) {
    if (s == "uniform")
        return UniformWeights{};
    if (s == "normal")
        return NormalWeights{sigma};
    if (s.rfind("file:", 0) == 0)
        return FileWeights{s.substr(5)};
    throw ParameterError("distribution must be uniform, normal or file:PATH, got '" + s + "'");
}

struct Common {
    unsigned threads = 0;
    bool force = false;
    std::string out;
};

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned n_pe = 1;
    std::size_t runs = 10;
    std::size_t traces = 2000;
    std::size_t n_tau = 8;
    std::string distribution = "uniform";
    double sigma = 20.0;
    double noise = 0.0;
    bool import_meta = false;
};

int cmd_simulate(const SimulateArgs &a, const Common &c) {
    ExperimentConfig cfg;
    if (!a.config.empty()) {
        cfg = load_experiment(a.config);
    } else {
        cfg.array.n_pe = a.n_pe;
        cfg.array.noise_sigma = a.noise;
        cfg.n_runs = a.runs;
        cfg.n_traces = a.traces;
        cfg.n_tau = a.n_tau;
        cfg.distribution = distribution_from_flag(a.distribution, a.sigma);
    }
    if (a.seed)
        cfg.seed = *a.seed;
    if (!c.out.empty())
        cfg.out = c.out;
    if (cfg.out.empty())
        throw ValidationError("out: no output directory (use --out or the config's 'out')");
    if (!cfg.n_pe_list.empty())
        throw ValidationError("n_pe: simulate takes a single PE count, not a list");
    cfg.validate();

    OutputLock lock(cfg.out, c.force);
    const auto campaign = generate_campaign(cfg.array, cfg.distribution, cfg.n_tau, cfg.n_traces, cfg.n_runs,
                                            cfg.seed, resolve_threads(c.threads));
    const fs::path path = cfg.out / "campaign.cpat";
    save_campaign(campaign, path);
    if (a.import_meta)
        write_import_metadata(campaign.runs.front(), cfg.out / "campaign.meta.json");
    std::cout << "wrote " << path.string() << " (+ " << sidecar_path(path).filename().string() << ")\n"
              << "n_pe=" << cfg.array.n_pe << " n_tau=" << cfg.n_tau << " n_traces=" << cfg.n_traces
              << " n_runs=" << cfg.n_runs << " seed=" << cfg.seed << '\n';
    return 0;
}

// --- attack ----------------------------------------------------------------

struct AttackArgs {
    std::string campaign;
    std::string meta;
    std::size_t tau = 0;
    std::size_t run = 0;
    std::string mode = "auto";
    std::string prefix;
    std::size_t target_pe = 0;
    std::size_t traces = 0;
    std::uint64_t cap = kDefaultHypothesisCap;
};

int cmd_attack(const AttackArgs &a, const Common &c) {
    SimulationRun run;
    ArrayConfig config;
    if (!a.meta.empty()) {
        run = import_external_traces(a.campaign, a.meta, a.run);
        config.n_pe = static_cast<unsigned>(std::max<std::size_t>(1, run.n_pe()));
    } else {
        auto campaign = load_campaign(a.campaign);
        if (a.run >= campaign.n_runs())
            throw RangeError("run " + std::to_string(a.run) + " out of range; campaign holds " +
                             std::to_string(campaign.n_runs()));
        config = campaign.config;
        run = std::move(campaign.runs[a.run]);
    }
    if (run.inputs.empty())
        throw UnusableForCpaError("traces carry no inputs; correlation attacks need the known inputs");

    std::optional<HypothesisSpace> space;
    if (a.mode == "full") {
        space = HypothesisSpace::full_enumeration(a.tau, config, a.cap);
    } else if (a.mode == "prefix") {
        std::vector<std::int32_t> prefix;
        if (!a.prefix.empty())
            prefix = parse_list(a.prefix);
        else if (run.weights_known)
            prefix.assign(run.weights.row(a.target_pe).begin(), run.weights.row(a.target_pe).begin() + a.tau);
        else
            throw ParameterError("prefix mode on traces with unknown weights needs --prefix");
        if (prefix.size() != a.tau)
            throw ParameterError("prefix must hold " + std::to_string(a.tau) + " weights for step " +
                                 std::to_string(a.tau));
        space = HypothesisSpace::known_prefix(prefix, config, a.cap);
    } else if (a.mode == "auto") {
        space = run.weights_known ? default_space(run, a.tau, config, a.target_pe)
                                  : HypothesisSpace::full_enumeration(a.tau, config, a.cap);
    } else {
        throw ParameterError("mode must be auto, full or prefix, got '" + a.mode + "'");
    }
    space->check_capacity();

    AttackOptions opts;
    opts.target_pe = a.target_pe;
    opts.n_traces = a.traces;
    opts.threads = resolve_threads(c.threads);
    const auto res = attack(run, *space, run.column_for(a.tau), config, opts);

    auto emit = [&](std::ostream &os) {
        os << "hypothesis_id,weights,abs_rho,is_correct,is_alias\n";
        for (std::size_t id = 0; id < res.coefficients.size(); ++id) {
            os << id << ",\"" << tuple_text(space->tuple(id)) << "\"," << format_number(res.coefficients[id]) << ','
               << int(res.correct[id]) << ',' << int(res.alias[id]) << '\n';
        }
    };
    std::optional<OutputLock> lock;
    if (!c.out.empty()) {
        lock.emplace(c.out, c.force);
        std::ofstream f(fs::path(c.out) / ("attack_tau" + std::to_string(a.tau) + ".csv"));
        emit(f);
    } else {
        emit(std::cout);
    }

    std::ostream &summary = c.out.empty() ? std::cerr : std::cout;
    summary << "summary: tau=" << a.tau << " candidates=" << res.coefficients.size()
            << " traces=" << res.n_traces_used << " argmax=";
    for (std::size_t i = 0; i < res.argmax.size(); ++i)
        summary << (i ? ";" : "") << tuple_text(space->tuple(res.argmax[i]));
    summary << " max_abs_rho=" << format_number(res.argmax.empty() ? 0.0 : res.coefficients[res.argmax.front()]);
    if (run.weights_known) {
        summary << " truth="
                << tuple_text({run.weights.row(a.target_pe).begin(), run.weights.row(a.target_pe).begin() + a.tau + 1})
                << " best_correct=" << format_number(res.best_correct)
                << " best_incorrect=" << format_number(res.best_incorrect)
                << " recovered=" << (res.recovered() ? "yes" : "no");
    }
    summary << '\n';
    return 0;
}

// --- snr -------------------------------------------------------------------

struct SnrArgs {
    std::string campaign;
    std::vector<std::size_t> taus;
    std::size_t target_pe = 0;
};

int cmd_snr(const SnrArgs &a, const Common &c) {
    const auto campaign = load_campaign(a.campaign);
    std::vector<std::size_t> taus = a.taus;
    if (taus.empty())
        for (std::size_t t = 0; t < campaign.n_tau; ++t)
            taus.push_back(t);
    std::optional<OutputLock> lock;
    std::ofstream file;
    if (!c.out.empty()) {
        lock.emplace(c.out, c.force);
        file.open(fs::path(c.out) / "snr.csv");
    }
    std::ostream &os = c.out.empty() ? std::cout : file;
    os << "tau,n_pe,snr,se,n_runs\n";
    for (auto tau : taus) {
        for (const auto &p :
             snr_curve(std::span(&campaign, 1), tau, a.target_pe, resolve_threads(c.threads)))
            os << tau << ',' << p.n_pe << ',' << format_number(p.snr) << ',' << format_number(p.se) << ','
               << p.n_runs << '\n';
    }
    return 0;
}

// --- crossing / fit --------------------------------------------------------

int cmd_crossing(const std::string &csv, std::size_t tau) {
    const auto curve = read_success_csv(csv, tau);
    const auto cp = crossing_point(curve);
    nlohmann::json j;
    j["tau"] = cp.tau;
    j["n_pe_star"] = cp.n_pe_star ? nlohmann::json(*cp.n_pe_star) : nlohmann::json(nullptr);
    j["confidence"] = cp.confidence;
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_fit(const std::string &csv) {
    const auto points = read_curve_csv(csv);
    const auto fit = fit_decay(points);
    nlohmann::json j;
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["c"] = fit.c;
    j["residual_sigma"] = fit.residual_sigma;
    j["iterations"] = fit.iterations;
    j["within_unit_interval"] = fit.within_unit_interval;
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --- reproduce -------------------------------------------------------------

struct ReproduceArgs {
    std::vector<std::string> figures;
    std::string scale = "desk";
    std::uint64_t seed = 1;
    std::optional<std::size_t> runs;
    std::string config;
    std::string weights;
    bool quiet = false;
};

int cmd_reproduce(const ReproduceArgs &a, const Common &c) {
    ReproduceOptions opts;
    opts.scale = scale_from_string(a.scale);
    opts.seed = a.seed;
    opts.threads = resolve_threads(c.threads);
    opts.n_runs = a.runs;
    if (!a.config.empty()) {
        const auto cfg = load_experiment(a.config);
        opts.array = cfg.array;
        opts.aggregation = cfg.aggregation;
    }
    if (!a.weights.empty())
        opts.weights = fs::path(a.weights);
    if (!a.quiet)
        opts.progress = [](unsigned n_pe, std::size_t done) {
            std::cerr << "\r  n_pe=" << n_pe << " runs=" << done << "   " << std::flush;
        };
    std::vector<std::string> figures;
    for (const auto &f : a.figures) {
        if (f == "all")
            figures.insert(figures.end(), kFigures.begin(), kFigures.end());
        else
            figures.push_back(f);
    }
    const fs::path out = c.out.empty() ? fs::path("reproduce-" + a.scale) : fs::path(c.out);
    OutputLock lock(out, c.force);
    const auto reports = reproduce(figures, out, opts);
    if (!a.quiet)
        std::cerr << '\n';
    std::cout << write_reports(reports, out);
    const bool ok = std::all_of(reports.begin(), reports.end(), [](const Report &r) { return r.passed(); });
    return ok ? 0 : kExitFail;
}

// --- import ----------------------------------------------------------------

int cmd_import(const std::string &traces, const std::string &meta, std::size_t run_index, const Common &c) {
    if (c.out.empty())
        throw ParameterError("import needs --out");
    auto run = import_external_traces(traces, meta, run_index);
    TraceCampaign campaign;
    campaign.config.n_pe = static_cast<unsigned>(std::max<std::size_t>(1, run.n_pe()));
    campaign.n_tau = run.n_tau();
    campaign.n_traces = run.n_traces();
    campaign.master_seed = run.seed;
    campaign.runs.push_back(std::move(run));
    OutputLock lock(c.out, c.force);
    const fs::path path = fs::path(c.out) / "imported.cpat";
    save_campaign(campaign, path);
    std::cout << "wrote " << path.string() << ": n_traces=" << campaign.n_traces << " n_tau=" << campaign.n_tau
              << " n_samples=" << campaign.runs.front().samples.cols() << " (weights unknown)\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Correlation power analysis of parallel MAC arrays"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (default: CPA_PARALLAB_THREADS or all cores)");

    auto add_out = [&](CLI::App *sub) {
        sub->add_option("--out", common.out, "Output directory");
        sub->add_flag("--force", common.force, "Write into a non-empty output directory");
        sub->add_option("--threads", common.threads, "Worker threads");
    };

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "Generate a trace campaign");
    simulate->add_option("--config", sim.config, "Experiment config JSON")->check(CLI::ExistingFile);
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--n-pe", sim.n_pe, "Parallel PEs");
    simulate->add_option("--runs", sim.runs, "Runs (independent weight draws)");
    simulate->add_option("--traces", sim.traces, "Traces per run");
    simulate->add_option("--n-tau", sim.n_tau, "MAC steps per trace");
    simulate->add_option("--distribution", sim.distribution, "uniform, normal or file:PATH");
    simulate->add_option("--sigma", sim.sigma, "Standard deviation of normal weights");
    simulate->add_option("--noise", sim.noise, "Gaussian noise sigma added to each sample");
    simulate->add_flag("--import-meta", sim.import_meta, "Also write import metadata for run 0");
    add_out(simulate);

    AttackArgs att;
    auto *attack_cmd = app.add_subcommand("attack", "Correlate weight hypotheses with one trace sample");
    attack_cmd->add_option("campaign", att.campaign, "Campaign or trace file")->required()->check(CLI::ExistingFile);
    attack_cmd->add_option("--tau", att.tau, "Attacked MAC step");
    attack_cmd->add_option("--run", att.run, "Run index");
    attack_cmd->add_option("--mode", att.mode, "auto, full or prefix");
    attack_cmd->add_option("--prefix", att.prefix, "Known weights for steps 0..tau-1, comma separated");
    attack_cmd->add_option("--meta", att.meta, "Import metadata for external traces")->check(CLI::ExistingFile);
    attack_cmd->add_option("--target-pe", att.target_pe, "PE whose weights are the correct hypothesis");
    attack_cmd->add_option("--traces", att.traces, "Use only the first N traces");
    attack_cmd->add_option("--cap", att.cap, "Maximum number of hypotheses");
    add_out(attack_cmd);

    SnrArgs snr;
    auto *snr_cmd = app.add_subcommand("snr", "SNR of the targeted PE per step");
    snr_cmd->add_option("campaign", snr.campaign, "Campaign file")->required()->check(CLI::ExistingFile);
    snr_cmd->add_option("--tau", snr.taus, "Steps (default: all)");
    snr_cmd->add_option("--target-pe", snr.target_pe, "Targeted PE");
    add_out(snr_cmd);

    std::string crossing_csv;
    std::size_t crossing_tau = 0;
    auto *crossing_cmd = app.add_subcommand("crossing", "PE count where the correct hypothesis stops winning");
    crossing_cmd->add_option("csv", crossing_csv, "Curve CSV with n_pe, rho, best_incorrect")
        ->required()
        ->check(CLI::ExistingFile);
    crossing_cmd->add_option("--tau", crossing_tau, "Step recorded in the output");

    std::string fit_csv;
    auto *fit_cmd = app.add_subcommand("fit", "Fit rho = a*exp(-b*n_pe) + c to a curve CSV");
    fit_cmd->add_option("csv", fit_csv, "Curve CSV with n_pe, rho")->required()->check(CLI::ExistingFile);

    ReproduceArgs rep;
    auto *reproduce_cmd = app.add_subcommand("reproduce", "Regenerate figure data and check reference values");
    reproduce_cmd->add_option("figures", rep.figures, "fig2 fig3 fig4 fig5 appendixA appendixB appendixC or all")
        ->required();
    reproduce_cmd->add_option("--scale", rep.scale, "desk (1000 runs) or full (10000 runs)")
        ->check(CLI::IsMember({"desk", "full"}));
    reproduce_cmd->add_option("--seed", rep.seed, "Master seed");
    reproduce_cmd->add_option("--runs", rep.runs, "Override the run count of the scale");
    reproduce_cmd->add_option("--config", rep.config, "Experiment config supplying array and aggregation settings")
        ->check(CLI::ExistingFile);
    reproduce_cmd->add_option("--weights", rep.weights, "Weight file for appendixC")->check(CLI::ExistingFile);
    reproduce_cmd->add_flag("--quiet", rep.quiet, "No progress output");
    add_out(reproduce_cmd);

    std::string import_traces, import_meta;
    std::size_t import_run = 0;
    auto *import_cmd = app.add_subcommand("import", "Convert external traces for offline attacks");
    import_cmd->add_option("traces", import_traces, "Trace file")->required()->check(CLI::ExistingFile);
    import_cmd->add_option("--meta", import_meta, "Metadata JSON with the inputs")
        ->required()
        ->check(CLI::ExistingFile);
    import_cmd->add_option("--run", import_run, "Run index inside the trace file");
    add_out(import_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*simulate)
            return cmd_simulate(sim, common);
        if (*attack_cmd)
            return cmd_attack(att, common);
        if (*snr_cmd)
            return cmd_snr(snr, common);
        if (*crossing_cmd)
            return cmd_crossing(crossing_csv, crossing_tau);
        if (*fit_cmd)
            return cmd_fit(fit_csv);
        if (*reproduce_cmd)
            return cmd_reproduce(rep, common);
        if (*import_cmd)
            return cmd_import(import_traces, import_meta, import_run, common);
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitUsage;
}
