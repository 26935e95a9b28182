#pragma once

#include "cpalab/study.h"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cpalab {

/// Declarative description of one experiment. Together with the library
/// version it fixes every output byte.
struct ExperimentConfig {
    ArrayConfig array;
    WeightDistribution distribution = UniformWeights{};
    std::size_t n_tau = 8;
    std::size_t n_traces = 2000;
    std::size_t n_runs = 1000;
    std::uint64_t seed = 1;
    std::vector<std::size_t> taus;
    std::vector<unsigned> n_pe_list;
    std::size_t target_pe = 0;
    IncorrectAggregation aggregation = IncorrectAggregation::MaxThenMean;
    std::filesystem::path out;

    /// Throws ValidationError naming every invalid field.
    void validate() const;
    StudyConfig study(unsigned threads) const;
};

nlohmann::json to_json(const ExperimentConfig &config);
/// Reads the keys array, distribution, n_tau, n_traces, n_runs, seed, taus,
/// n_pe, target_pe, aggregation and out. Missing keys keep their defaults;
/// unknown keys and bad values are collected into one ValidationError.
ExperimentConfig experiment_from_json(const nlohmann::json &j);
ExperimentConfig load_experiment(const std::filesystem::path &path);

std::string to_string(IncorrectAggregation a);
IncorrectAggregation aggregation_from_string(const std::string &s);

enum class Scale { Desk, Full };
Scale scale_from_string(const std::string &s);
std::string to_string(Scale s);
std::size_t scale_runs(Scale s);

/// Holds an output directory for the lifetime of the object. Refuses a
/// directory that already has content unless \p force is set, and refuses a
/// directory locked by another process in any case.
class OutputLock {
  public:
    OutputLock(const std::filesystem::path &dir, bool force);
    ~OutputLock();
    OutputLock(const OutputLock &) = delete;
    OutputLock &operator=(const OutputLock &) = delete;

    const std::filesystem::path &dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    std::filesystem::path lock_;
};

struct Check {
    std::string name;
    double value = 0.0;
    std::string expected;
    bool pass = false;
};

struct Report {
    std::string figure;
    std::vector<Check> checks;
    std::vector<std::filesystem::path> files;

    bool passed() const;
};

inline const std::vector<std::string> kFigures = {"fig2",      "fig3",      "fig4",     "fig5",
                                                  "appendixA", "appendixB", "appendixC"};

struct ReproduceOptions {
    Scale scale = Scale::Desk;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::optional<std::size_t> n_runs; ///< overrides the scale's run count
    /// Array and aggregation settings applied to every generated campaign.
    ArrayConfig array;
    IncorrectAggregation aggregation = IncorrectAggregation::MaxThenMean;
    /// Weight file for appendixC. Without one a synthetic file is written.
    std::optional<std::filesystem::path> weights;
    ProgressCallback progress;
};

/// Regenerate the data behind each figure in \p figures, write its CSV tables
/// into \p out and compare against the embedded reference values. Campaigns
/// shared between figures are computed once.
std::vector<Report> reproduce(const std::vector<std::string> &figures, const std::filesystem::path &out,
                              const ReproduceOptions &options);

/// Writes report.json and returns the human-readable report text.
std::string write_reports(const std::vector<Report> &reports, const std::filesystem::path &out);

} // namespace cpalab
