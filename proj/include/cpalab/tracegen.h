#pragma once

#include "cpalab/leakage.h"
#include "cpalab/matrix.h"
#include "cpalab/random.h"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cpalab {

/// Weights drawn uniformly over the whole weight range.
struct UniformWeights {
    bool operator==(const UniformWeights &) const = default;
};

/// Zero-mean Gaussian weights, rounded to the nearest integer and then
/// clamped to the weight range.
struct NormalWeights {
    double sigma = 20.0;
    bool operator==(const NormalWeights &) const = default;
};

/// Fixed weights read from a text file of integers (whitespace or comma
/// separated, '#' starts a comment). The first n_pe * n_tau values are used in
/// row-major order, identically in every run.
struct FileWeights {
    std::filesystem::path path;
    bool operator==(const FileWeights &) const = default;
};

using WeightDistribution = std::variant<UniformWeights, NormalWeights, FileWeights>;

std::string describe(const WeightDistribution &dist);

/// Weight matrix [n_pe x n_tau] from \p dist. Throws ParameterError for a
/// non-positive sigma, DimensionError for a weight file that is too short and
/// RangeError for file weights outside the weight range.
Matrix<std::int32_t> sample_weights(const WeightDistribution &dist, const ArrayConfig &config,
                                    std::size_t n_tau, Rng &rng);

/// Integers of a weight file, in file order.
std::vector<std::int32_t> read_weight_file(const std::filesystem::path &path);

/// One simulation run (or one imported measurement set).
///
/// `samples` holds one row per trace. Simulated runs have one sample per MAC
/// step; imported runs may have any number of samples per trace and map each
/// step to a sample column through `window`.
struct SimulationRun {
    Matrix<std::int32_t> weights;    ///< [n_pe x n_tau]; empty-valued when unknown
    bool weights_known = true;
    Matrix<std::int32_t> inputs;     ///< [n_traces x n_tau]
    Matrix<float> samples;           ///< [n_traces x n_samples]
    std::uint64_t seed = 0;
    std::vector<std::size_t> window; ///< step -> sample column; empty means identity

    std::size_t n_traces() const { return inputs.rows(); }
    std::size_t n_tau() const { return inputs.cols(); }
    std::size_t n_pe() const { return weights.rows(); }
    /// Sample column holding step \p tau; throws RangeError if unmapped.
    std::size_t column_for(std::size_t tau) const;

    bool operator==(const SimulationRun &) const = default;
};

/// A set of runs sharing configuration and dimensions.
struct TraceCampaign {
    ArrayConfig config;
    WeightDistribution distribution = UniformWeights{};
    std::size_t n_tau = 8;
    std::size_t n_traces = 2000;
    std::uint64_t master_seed = 0;
    std::vector<SimulationRun> runs;

    std::size_t n_runs() const { return runs.size(); }

    bool operator==(const TraceCampaign &) const = default;
};

/// Seed of run \p index in a campaign with \p master_seed.
inline std::uint64_t run_seed(std::uint64_t master_seed, std::size_t index) {
    return derive_seed(master_seed, index);
}

/// Noise-free per-PE leakage [n_traces x n_tau] of the PE holding \p weights.
Matrix<std::uint8_t> pe_leakage(std::span<const std::int32_t> weights, const Matrix<std::int32_t> &inputs,
                                const ArrayConfig &config);

/// Deterministic run: weights come from sub-stream 0 of \p seed, trace t draws
/// its inputs and then its noise from sub-stream t + 1. Requires n_traces >= 2.
SimulationRun generate_run(const ArrayConfig &config, const WeightDistribution &dist, std::size_t n_tau,
                           std::size_t n_traces, std::uint64_t seed, unsigned threads = 1);

/// Campaign of \p n_runs runs; run i uses run_seed(master_seed, i).
TraceCampaign generate_campaign(const ArrayConfig &config, const WeightDistribution &dist, std::size_t n_tau,
                                std::size_t n_traces, std::size_t n_runs, std::uint64_t master_seed,
                                unsigned threads = 1);

// Trace files -------------------------------------------------------------

/// Path of the JSON sidecar written next to a trace file.
std::filesystem::path sidecar_path(const std::filesystem::path &trace_path);

/// Write \p campaign as a trace file plus its JSON sidecar.
void save_campaign(const TraceCampaign &campaign, const std::filesystem::path &path);

/// Read a campaign written by save_campaign. Throws FormatError on bad magic,
/// version or dtype, TruncationError when the file is shorter than its header
/// implies, DimensionError when header and sidecar disagree.
TraceCampaign load_campaign(const std::filesystem::path &path);

/// Write import metadata for \p run (inputs, trace count, optional window map)
/// in the format import_external_traces expects.
void write_import_metadata(const SimulationRun &run, const std::filesystem::path &meta_path);

/// Load measured traces for offline attacks. The trace file uses the campaign
/// format; the metadata JSON must provide "inputs" (one row per trace) and may
/// provide "n_traces" and a "window" object mapping step -> sample index.
/// Weights of the result are marked unknown.
SimulationRun import_external_traces(const std::filesystem::path &trace_path,
                                     const std::filesystem::path &meta_path, std::size_t run_index = 0);

} // namespace cpalab
