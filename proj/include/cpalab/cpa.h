#pragma once

#include "cpalab/leakage.h"
#include "cpalab/matrix.h"
#include "cpalab/tracegen.h"

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace cpalab {

inline constexpr std::uint64_t kDefaultHypothesisCap = std::uint64_t{1} << 24;

/// Every tuple of `k_weights` weights for steps 0..k_weights-1.
struct FullEnumeration {
    unsigned k_weights = 1;
};

/// The weights of steps 0..tau-1 are known; only the weight of step tau is
/// enumerated.
struct KnownPrefix {
    std::vector<std::int32_t> prefix;
};

using HypothesisMode = std::variant<FullEnumeration, KnownPrefix>;

/// Candidate weight tuples for an attack on step `tau`. Candidates are never
/// materialised: id <-> tuple is a mixed-radix mapping with the weight of the
/// last step varying fastest.
class HypothesisSpace {
  public:
    HypothesisSpace(std::size_t tau, HypothesisMode mode, OperandRange weight_range,
                    std::uint64_t cap = kDefaultHypothesisCap);

    static HypothesisSpace full_enumeration(std::size_t tau, const ArrayConfig &config,
                                            std::uint64_t cap = kDefaultHypothesisCap);
    static HypothesisSpace known_prefix(std::vector<std::int32_t> prefix, const ArrayConfig &config,
                                        std::uint64_t cap = kDefaultHypothesisCap);

    std::size_t tau() const { return tau_; }
    const HypothesisMode &mode() const { return mode_; }
    const OperandRange &weight_range() const { return range_; }
    std::uint64_t cap() const { return cap_; }
    bool is_full_enumeration() const { return std::holds_alternative<FullEnumeration>(mode_); }

    /// Number of candidates; saturates at UINT64_MAX.
    std::uint64_t size() const { return size_; }
    /// Throws CapacityError if size() exceeds the cap.
    void check_capacity() const;

    /// Weights for steps 0..tau of candidate \p id.
    std::vector<std::int32_t> tuple(std::uint64_t id) const;
    /// Candidate id of a full step-0..tau weight tuple, if the space holds it.
    std::optional<std::uint64_t> find(std::span<const std::int32_t> weights) const;

  private:
    std::size_t tau_;
    HypothesisMode mode_;
    OperandRange range_;
    std::uint64_t cap_;
    std::uint64_t size_ = 0;
};

/// Hypothetical leakage [n_candidates x n_traces] of every candidate, using
/// the same HW/HD rule as trace generation. Throws CapacityError above the cap.
Matrix<std::uint8_t> hypothesize_leakage(const HypothesisSpace &space, const Matrix<std::int32_t> &inputs,
                                         const ArrayConfig &config = {});

/// Pearson correlation, accumulated in one pass with Welford-style co-moment
/// updates. Returns nullopt when either vector has zero variance. Throws
/// ParameterError for unequal lengths or fewer than two samples.
std::optional<double> pearson(std::span<const double> h, std::span<const double> p);

struct AttackOptions {
    std::size_t target_pe = 0;
    /// Use only the first n traces; 0 means all.
    std::size_t n_traces = 0;
    unsigned threads = 1;
};

/// Ranking of every hypothesis by absolute correlation with one sample column.
struct CorrelationResult {
    std::size_t tau = 0;
    std::vector<double> coefficients;  ///< |rho| per candidate, 0 when undefined
    std::vector<std::uint8_t> undefined;
    std::vector<std::uint8_t> correct; ///< tuple of some PE (simulation only)
    std::vector<std::uint8_t> alias;   ///< shift alias of a correct weight (step 0 only)
    std::vector<std::uint64_t> correct_indices;
    std::optional<std::uint64_t> correct_index; ///< tuple of the targeted PE
    std::vector<std::uint64_t> argmax;          ///< every candidate tied for the maximum
    double best_correct = 0.0;
    double best_incorrect = 0.0;
    std::size_t n_traces_used = 0;

    /// |rho| of the targeted PE's tuple, or nullopt if it is not in the space.
    std::optional<double> target_rho() const {
        if (!correct_index)
            return std::nullopt;
        return coefficients[*correct_index];
    }
    bool target_undefined() const { return correct_index && undefined[*correct_index] != 0; }
    /// True when the targeted PE's tuple (or, at step 0, one of its aliases)
    /// is among the argmax set.
    bool recovered() const;
};

/// Correlate every candidate of \p space with sample column \p sample_column
/// of \p run. When the run's weights are known, the tuples of all PEs are
/// flagged correct; at step 0 their shift aliases w * 2^k are flagged as
/// aliases and excluded from best_incorrect together with the correct ones.
CorrelationResult attack(const SimulationRun &run, const HypothesisSpace &space, std::size_t sample_column,
                         const ArrayConfig &config = {}, const AttackOptions &options = {});

/// The hypothesis space used for success curves: full enumeration of one
/// weight at step 0, the targeted PE's true prefix plus one enumerated weight
/// at later steps.
HypothesisSpace default_space(const SimulationRun &run, std::size_t tau, const ArrayConfig &config,
                              std::size_t target_pe = 0);

/// How best-incorrect correlations are aggregated over runs.
enum class IncorrectAggregation {
    MaxThenMean, ///< best incorrect per run, then the mean over runs
    MeanThenMax, ///< mean per candidate over the runs where it is incorrect, then the max
};

struct SuccessPoint {
    unsigned n_pe = 0;
    std::size_t tau = 0;
    double mean_correct = 0.0;
    double mean_incorrect = 0.0;
    double se_correct = 0.0;
    double se_incorrect = 0.0;
    std::size_t n_runs = 0;
};

struct SuccessOptions {
    std::size_t target_pe = 0;
    IncorrectAggregation aggregation = IncorrectAggregation::MaxThenMean;
    unsigned threads = 1;
};

/// Mean |rho(H_cw)| and mean best-incorrect per (campaign, tau). Each
/// campaign contributes the points of its own n_pe.
std::vector<SuccessPoint> success_curve(std::span<const TraceCampaign> campaigns, std::span<const std::size_t> taus,
                                        const SuccessOptions &options = {});

struct ProgressPoint {
    std::size_t n_traces = 0;
    double rho_correct = 0.0;
    bool undefined = false;
    double best_incorrect = 0.0;
};

/// |rho(H_cw)| recomputed on growing trace prefixes. Checkpoints must be
/// increasing and within [2, n_traces]; otherwise RangeError.
std::vector<ProgressPoint> trace_count_progression(const SimulationRun &run, const HypothesisSpace &space,
                                                   std::size_t sample_column, std::span<const std::size_t> checkpoints,
                                                   const ArrayConfig &config = {}, const AttackOptions &options = {});

} // namespace cpalab
