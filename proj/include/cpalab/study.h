#pragma once

#include "cpalab/cpa.h"
#include "cpalab/fitting.h"
#include "cpalab/metrics.h"
#include "cpalab/tracegen.h"

#include <functional>
#include <map>
#include <vector>

namespace cpalab {

/// A sweep over PE counts and attacked steps. Runs are generated, attacked
/// and discarded one at a time, so full-scale sweeps never hold a campaign
/// in memory.
///
/// Run r for n_pe uses the seed run_seed(derive_seed(master_seed, n_pe), r):
/// the study sees exactly the runs of
/// generate_campaign(config with n_pe, ..., derive_seed(master_seed, n_pe)).
struct StudyConfig {
    ArrayConfig array; ///< n_pe is overridden by each entry of n_pe_list
    WeightDistribution distribution = UniformWeights{};
    std::size_t n_tau = 8;
    std::size_t n_traces = 2000;
    std::size_t n_runs = 100;
    std::uint64_t master_seed = 1;
    std::vector<unsigned> n_pe_list;
    std::vector<std::size_t> taus;
    std::size_t target_pe = 0;
    IncorrectAggregation aggregation = IncorrectAggregation::MaxThenMean;
    unsigned threads = 1;
};

/// Campaign master seed used for \p n_pe inside a study.
std::uint64_t study_campaign_seed(std::uint64_t master_seed, unsigned n_pe);

struct StudyResult {
    std::vector<SuccessPoint> success;       ///< ordered by tau, then n_pe
    std::vector<SnrPoint> snr;               ///< ordered by tau, then n_pe
    std::vector<SnrObservation> observations; ///< one per (n_pe, run, tau)

    /// Success points of one step, increasing n_pe.
    std::vector<SuccessPoint> curve(std::size_t tau) const;
    std::vector<SnrPoint> snr_curve(std::size_t tau) const;
    /// Decay points of one step with the run-level rho(H_cw) samples attached.
    std::vector<DecayPoint> decay_points(std::size_t tau) const;
};

using ProgressCallback = std::function<void(unsigned n_pe, std::size_t runs_done)>;

StudyResult run_study(const StudyConfig &config, const ProgressCallback &progress = {});

} // namespace cpalab
