#pragma once

#include "cpalab/cpa.h"
#include "cpalab/tracegen.h"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace cpalab {

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

/// Mean SNR of the targeted PE at one (n_pe, tau). A single PE has no
/// algorithmic noise; its SNR is the infinite sentinel, never a number.
struct SnrPoint {
    unsigned n_pe = 0;
    std::size_t tau = 0;
    double snr = 0.0;
    double se = 0.0;
    std::size_t n_runs = 0;

    bool infinite() const { return snr == kInfiniteSnr; }
};

/// Var(target PE leakage) / Var(everything else in the sample) for one run.
/// The target leakage is recomputed from the stored weights and inputs, so
/// additive noise in the samples counts as noise. Returns kInfiniteSnr when
/// the remainder has zero variance.
double run_snr(const SimulationRun &run, std::size_t tau, const ArrayConfig &config, std::size_t target_pe = 0);

/// One SnrPoint per campaign: run_snr averaged over the runs with finite SNR
/// (a neighbour holding weight 0 contributes no variance). The point is
/// infinite only when every run is.
std::vector<SnrPoint> snr_curve(std::span<const TraceCampaign> campaigns, std::size_t tau,
                                std::size_t target_pe = 0, unsigned threads = 1);

struct CrossPeResult {
    std::size_t tau = 0;
    double max_abs_rho = 0.0; ///< max of sampled and witness values
    double sampled_max = 0.0; ///< over randomly drawn weight-vector pairs
    double witness_max = 0.0; ///< over the deterministic shift-pair sweep (step 0 only)
    std::size_t n_runs = 0;
};

struct CrossPeOptions {
    std::size_t n_traces = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool witness_sweep = true;
};

/// Maximum |rho| between the step-tau leakage of two PEs holding distinct
/// random weight vectors and sharing their inputs, over \p n_runs draws.
///
/// At step 0 a deterministic sweep over weight pairs (w, w * 2^k), k = 0..7,
/// is added. k = 0 pairs two different weight vectors that agree at step 0;
/// their step-0 leakage is identical, so the sweep reaches 1 exactly. For
/// k > 0 the pair is exact only while w * x stays non-negative.
CrossPeResult cross_pe_dependence(std::size_t tau, std::size_t n_runs, const ArrayConfig &config,
                                  const CrossPeOptions &options = {});

struct CrossingPoint {
    std::size_t tau = 0;
    std::optional<unsigned> n_pe_star;
    /// Half-width of the n_pe interval in which the two curves are within two
    /// combined standard errors of each other.
    double confidence = 0.0;
};

/// First n_pe at which mean rho(H_cw) drops below mean best-incorrect.
/// Points must share one tau and have strictly increasing n_pe; otherwise
/// RangeError.
CrossingPoint crossing_point(std::span<const SuccessPoint> curve);

/// Per-run observation feeding the correlation-vs-SNR aggregation.
struct SnrObservation {
    unsigned n_pe = 0;
    std::size_t tau = 0;
    double snr = 0.0;
    double rho_correct = 0.0;
    double best_incorrect = 0.0;
};

struct SnrBin {
    double lo = 0.0;
    double hi = 0.0;
    double center = 0.0; ///< geometric center
    std::size_t count = 0;
    double mean_correct = 0.0;
    double se_correct = 0.0;
    double mean_incorrect = 0.0;
    double envelope_min = 0.0; ///< min over tau of the per-tau mean rho(H_cw)
    double envelope_max = 0.0;
};

struct SnrCurve {
    std::vector<SnrBin> bins; ///< non-empty bins only, increasing SNR
    /// SNR where the pooled mean rho(H_cw) falls to the pooled best-incorrect.
    std::optional<double> threshold_mean;
    /// Largest per-tau crossing SNR: the SNR needed at the least favourable tau.
    std::optional<double> threshold_worst;
    std::vector<std::pair<std::size_t, std::optional<double>>> threshold_per_tau;
};

struct SnrBinning {
    std::size_t n_bins = 40;
    double lo = 1e-3;
    double hi = 10.0;
};

/// Bin observations by SNR on a log scale and locate the success threshold.
/// Observations outside [lo, hi) (including infinite SNR) are dropped.
SnrCurve correlation_vs_snr(std::span<const SnrObservation> observations, const SnrBinning &binning = {});

} // namespace cpalab
