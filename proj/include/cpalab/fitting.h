#pragma once

#include "cpalab/cpa.h"
#include "cpalab/error.h"

#include <optional>
#include <span>
#include <vector>

namespace cpalab {

/// rho(n_pe) = a * exp(-b * n_pe) + c
struct DecayFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    /// Largest deviation between the fitted curve and the mean data point
    /// over all abscissae.
    double residual_sigma = 0.0;
    /// Largest RMS deviation between the curve and the run-level samples at
    /// one abscissa; only set when the points carry samples.
    std::optional<double> run_level_sigma;
    std::optional<std::size_t> tau;
    std::size_t iterations = 0;
    /// Fitted curve stays within [0, 1 + 1e-6] at every data abscissa.
    bool within_unit_interval = true;
};

struct DecayPoint {
    double n_pe = 0.0;
    double rho = 0.0;
    std::vector<double> samples; ///< optional run-level values behind `rho`
};

struct FitOptions {
    std::size_t max_iterations = 1000;
    double step_tolerance = 1e-10;
};

/// Raised when the iteration budget runs out; carries the last iterate.
class NoConvergenceError : public Error {
  public:
    NoConvergenceError(const std::string &what, DecayFit last) : Error(what), last_(last) {}
    const DecayFit &last_iterate() const { return last_; }

  private:
    DecayFit last_;
};

double evaluate_decay(const DecayFit &fit, double n_pe);

/// Least-squares fit of the decay law by damped Gauss-Newton
/// (Levenberg-Marquardt) with analytic derivatives.
///
/// Start: c0 = min(rho), a0 = max(rho) - c0, b0 from a log-linear
/// regression of rho - c0. Needs at least four points with strictly
/// increasing n_pe (ParameterError otherwise). Constant data and fits that
/// do not decay (b <= 0) raise FitDegenerateError.
DecayFit fit_decay(std::span<const DecayPoint> points, const FitOptions &options = {});

/// One fit of mean rho(H_cw) over n_pe for every tau present in \p curve.
std::vector<DecayFit> fit_all_taus(std::span<const SuccessPoint> curve, const FitOptions &options = {});

} // namespace cpalab
