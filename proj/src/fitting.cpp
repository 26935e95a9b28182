#include "cpalab/fitting.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace cpalab {

namespace {

using Vec3 = Eigen::Vector3d;

double cost(std::span<const DecayPoint> pts, const Vec3 &th) {
    double s = 0.0;
    for (const auto &p : pts) {
        const double r = th[0] * std::exp(-th[1] * p.n_pe) + th[2] - p.rho;
        s += r * r;
    }
    return s;
}

Vec3 initial_guess(std::span<const DecayPoint> pts) {
    double lo = pts[0].rho, hi = pts[0].rho;
    for (const auto &p : pts) {
        lo = std::min(lo, p.rho);
        hi = std::max(hi, p.rho);
    }
    // Keep rho - c0 strictly positive for the log regression.
    const double c0 = lo - 1e-3 * (hi - lo);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (const auto &p : pts) {
        const double y = std::log(p.rho - c0);
        sx += p.n_pe;
        sy += y;
        sxx += p.n_pe * p.n_pe;
        sxy += p.n_pe * y;
        n += 1;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double b0 = slope < 0 ? -slope : 0.5;
    const double intercept = (sy - slope * sx) / n;
    const double a0 = slope < 0 ? std::exp(intercept) : hi - lo;
    return {a0, b0, c0};
}

} // namespace

double evaluate_decay(const DecayFit &fit, double n_pe) { return fit.a * std::exp(-fit.b * n_pe) + fit.c; }

DecayFit fit_decay(std::span<const DecayPoint> points, const FitOptions &options) {
    if (points.size() < 4)
        throw ParameterError("decay fit needs at least 4 points, got " + std::to_string(points.size()));
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i].n_pe > points[i - 1].n_pe))
            throw ParameterError("decay fit needs strictly increasing n_pe values");
    for (const auto &p : points)
        if (!std::isfinite(p.rho) || !std::isfinite(p.n_pe))
            throw ParameterError("decay fit points must be finite");
    const auto [mn, mx] = std::minmax_element(points.begin(), points.end(),
                                              [](const auto &l, const auto &r) { return l.rho < r.rho; });
    if (mx->rho - mn->rho <= 1e-12 * std::max(1.0, std::abs(mx->rho)))
        throw FitDegenerateError("decay fit: all rho values are equal, decay rate is unidentifiable");

    {
        double mx_n = 0.0, my = 0.0;
        for (const auto &p : points) {
            mx_n += p.n_pe;
            my += p.rho;
        }
        mx_n /= static_cast<double>(points.size());
        my /= static_cast<double>(points.size());
        double sxy = 0.0;
        for (const auto &p : points)
            sxy += (p.n_pe - mx_n) * (p.rho - my);
        if (sxy >= 0.0)
            throw FitDegenerateError("decay fit: rho does not decrease with n_pe");
    }

    Vec3 th = initial_guess(points);
    double current = cost(points, th);
    double lambda = 1e-3;
    bool converged = false;
    std::size_t it = 0;
    for (; it < options.max_iterations; ++it) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Vec3 jtr = Vec3::Zero();
        for (const auto &p : points) {
            const double e = std::exp(-th[1] * p.n_pe);
            const Vec3 g(e, -th[0] * p.n_pe * e, 1.0);
            const double r = th[0] * e + th[2] - p.rho;
            jtj += g * g.transpose();
            jtr += g * r;
        }
        if (jtr.norm() == 0.0) {
            converged = true;
            break;
        }
        bool stepped = false;
        for (int attempt = 0; attempt < 60; ++attempt) {
            Eigen::Matrix3d damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Vec3 step = damped.ldlt().solve(-jtr);
            if (!step.allFinite()) {
                lambda *= 10;
                continue;
            }
            const Vec3 trial = th + step;
            const double trial_cost = cost(points, trial);
            const bool small = step.norm() <= options.step_tolerance * (th.norm() + options.step_tolerance);
            if (trial_cost <= current) {
                th = trial;
                current = trial_cost;
                lambda = std::max(lambda / 10, 1e-15);
                stepped = true;
                if (small)
                    converged = true;
                break;
            }
            if (small) {
                converged = true;
                break;
            }
            lambda *= 10;
        }
        if (converged)
            break;
        if (!stepped) {
            // No descent direction left at any damping: a stationary point.
            converged = true;
            break;
        }
    }

    DecayFit fit;
    fit.a = th[0];
    fit.b = th[1];
    fit.c = th[2];
    fit.iterations = it;
    for (const auto &p : points) {
        const double f = evaluate_decay(fit, p.n_pe);
        fit.residual_sigma = std::max(fit.residual_sigma, std::abs(f - p.rho));
        if (f < 0.0 || f > 1.0 + 1e-6)
            fit.within_unit_interval = false;
        if (!p.samples.empty()) {
            double s = 0.0;
            for (double v : p.samples)
                s += (v - f) * (v - f);
            const double rms = std::sqrt(s / static_cast<double>(p.samples.size()));
            fit.run_level_sigma = std::max(fit.run_level_sigma.value_or(0.0), rms);
        }
    }
    if (!converged)
        throw NoConvergenceError("decay fit did not converge within " + std::to_string(options.max_iterations) +
                                     " iterations",
                                 fit);
    if (!(fit.b > 0.0) || !th.allFinite())
        throw FitDegenerateError("decay fit: data do not decay (b = " + std::to_string(fit.b) + ")");
    return fit;
}

std::vector<DecayFit> fit_all_taus(std::span<const SuccessPoint> curve, const FitOptions &options) {
    std::map<std::size_t, std::vector<DecayPoint>> by_tau;
    for (const auto &p : curve)
        by_tau[p.tau].push_back({static_cast<double>(p.n_pe), p.mean_correct, {}});
    std::vector<DecayFit> out;
    for (auto &[tau, pts] : by_tau) {
        std::sort(pts.begin(), pts.end(), [](const auto &l, const auto &r) { return l.n_pe < r.n_pe; });
        auto fit = fit_decay(pts, options);
        fit.tau = tau;
        out.push_back(fit);
    }
    return out;
}

} // namespace cpalab
