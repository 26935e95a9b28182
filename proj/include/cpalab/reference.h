#pragma once

// Published reference values the reproduction reports are checked against,
// and the tolerances of each check. Bump kReferenceVersion whenever a value
// or tolerance changes.

#include <array>
#include <cstddef>

namespace cpalab::reference {

inline constexpr int kReferenceVersion = 1;

/// Decay-law coefficients of mean rho(H_cw) over n_pe for one step, with the
/// reported maximum deviation between law and simulated curve.
struct DecayCoefficients {
    std::size_t tau;
    double a;
    double b;
    double c;
    double sigma;
};

inline constexpr std::array<DecayCoefficients, 8> kDecay = {{
    {0, 0.369, 0.637, 0.534, 0.011762},
    {1, 0.392, 0.450, 0.465, 0.029043},
    {2, 0.441, 0.532, 0.449, 0.022669},
    {3, 0.439, 0.456, 0.431, 0.024154},
    {4, 0.468, 0.473, 0.419, 0.022269},
    {5, 0.494, 0.511, 0.413, 0.019673},
    {6, 0.457, 0.470, 0.407, 0.026922},
    {7, 0.482, 0.507, 0.393, 0.026230},
}};

/// Largest reported deviation of any of the three headline fits (tau 0, 3, 7).
inline constexpr double kMaxReportedSigma = 0.0263;

/// Mean SNR needed for a successful attack, and its check tolerance.
inline constexpr double kSnrThreshold = 0.045;
inline constexpr double kSnrThresholdTolerance = 0.015;
/// Worst-case SNR requirement (least favourable step) must fall in this range.
inline constexpr double kSnrWorstLow = 0.07;
inline constexpr double kSnrWorstHigh = 0.15;

/// PE count at which the correct hypothesis stops winning.
inline constexpr unsigned kCrossingTau0 = 10;
inline constexpr unsigned kCrossingTau0Tolerance = 2;
inline constexpr unsigned kCrossingLater = 15;
inline constexpr unsigned kCrossingLaterTolerance = 3;

/// SNR at 17 PEs must be below this value.
inline constexpr double kSnrAt17Max = 0.05;
/// SNR at 32 PEs, step 7.
inline constexpr double kSnrAt32Max = 0.05;

/// Mean rho(H_cw) at 30 and 32 PEs differs by less than this.
inline constexpr double kSaturationTolerance = 0.02;

/// Normal(sigma = 20) weight curves match uniform ones pointwise within this.
inline constexpr double kNormalWeightSigma = 20.0;
inline constexpr double kDistributionTolerance = 0.05;

/// Cross-PE dependence: stagnation band for steps 8, 9, 10.
inline constexpr double kCrossPeStagnation = 0.05;

struct ScaleTolerance {
    std::size_t n_runs;
    double coefficient;
    double residual_sigma;
};

inline constexpr ScaleTolerance kDesk = {1000, 0.05, 0.035};
inline constexpr ScaleTolerance kFull = {10000, 0.03, kMaxReportedSigma + 0.005};

inline constexpr std::size_t kTracesPerRun = 2000;
inline constexpr std::size_t kSteps = 8;
inline constexpr unsigned kMaxPe = 32;

inline const DecayCoefficients &decay(std::size_t tau) { return kDecay[tau]; }

} // namespace cpalab::reference
