#pragma once

// Quantile and tail-probability envelopes for any X dominated by a known Y in
// the increasing convex order, together with the numerical probes that
// certify the hypotheses each envelope needs.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "convex_tail/distribution.hpp"
#include "convex_tail/errors.hpp"
#include "convex_tail/quadrature.hpp"

namespace convex_tail {

enum class CurveMeaning { quantile_envelope, tail_bound };

inline const char* to_string(CurveMeaning m)
{
    return m == CurveMeaning::quantile_envelope ? "quantile_envelope" : "tail_bound";
}

struct HypothesisCheck {
    std::string name;
    bool passed;
    double lhs;
    double rhs;
};

struct BoundCurve {
    std::vector<double> abscissas;
    std::vector<double> values;
    CurveMeaning meaning;
    /// Tail-bound curves indexed by t carry the level the bound applies to.
    std::vector<double> thresholds;
    /// Short tag naming the result that produced the curve.
    std::string provenance;
    std::vector<HypothesisCheck> checks;
};

struct RegularityParams {
    double p;
    double T;

    RegularityParams(double p_, double T_) : p(p_), T(T_)
    {
        if (!(p_ > 1.0) || !(T_ >= 1.0)) {
            throw std::invalid_argument("regularity parameters need p > 1 and T >= 1");
        }
    }
};

struct RegionAreas {
    double A;
    double B;
    double C;
    double D;
    double x;
    double R;
    double level_x;    // H*(x)
    double level_x_R;  // H*(x/R)
};

/// Non-increasing omega: (0,1) -> (1, inf) with finite integral.
class OmegaSpec {
public:
    static OmegaSpec from_function(std::function<double(double)> omega)
    {
        for (int i = 1; i < 1000; ++i) {
            const double u = i / 1000.0;
            const double w = omega(u);
            if (!(w > 1.0)) {
                throw std::invalid_argument("omega must map (0,1) into (1, inf); omega(" + std::to_string(u) +
                                            ") = " + std::to_string(w));
            }
            if (i > 1 && w > omega((i - 1) / 1000.0)) {
                throw std::invalid_argument("omega must be non-increasing (fails near u = " + std::to_string(u) +
                                            ")");
            }
        }
        const double integral =
            quadrature::integrate_singular_left(omega, 0.5) + quadrature::integrate(omega, 0.5, 1.0);
        return OmegaSpec(std::move(omega), integral);
    }

    double operator()(double u) const { return omega_(u); }
    double integral() const { return integral_; }

private:
    OmegaSpec(std::function<double(double)> omega, double integral)
        : omega_(std::move(omega)), integral_(integral)
    {
    }

    std::function<double(double)> omega_;
    double integral_;
};

namespace detail {

inline std::vector<double> unit_probe_grid()
{
    std::vector<double> g;
    for (int i = 1; i <= 99; ++i) {
        g.push_back(i / 100.0);
    }
    return g;
}

inline bool within(double lhs, double rhs, double rel = 1e-12)
{
    return lhs <= rhs + rel * std::max(std::abs(lhs), std::abs(rhs));
}

}  // namespace detail

/// H_X(x) <= (1/(1-x)) int_x^1 H_Y(u) du at each requested level.
inline BoundCurve quantile_envelope(const Distribution& d, const std::vector<double>& xs)
{
    if (!std::is_sorted(xs.begin(), xs.end())) {
        throw std::invalid_argument("quantile_envelope: levels must be sorted");
    }
    BoundCurve curve{xs, {}, CurveMeaning::quantile_envelope, {}, "maximal_quantile", {}};
    curve.values.reserve(xs.size());
    for (double x : xs) {
        curve.values.push_back(upper_mean(d, x));
    }
    return curve;
}

/// H_X(x) <= H(x) * int_0^1 omega, given H_Y <= H and the scaling
/// H(1 - delta(1 - x)) <= omega(delta) H(x). Both hypotheses are probed on
/// the grid {0.01, ..., 0.99} (squared for the scaling condition).
inline BoundCurve omega_bound(const Distribution& d, const std::function<double(double)>& envelope,
                              const OmegaSpec& omega, const std::vector<double>& xs)
{
    const auto grid = detail::unit_probe_grid();
    BoundCurve curve{xs, {}, CurveMeaning::quantile_envelope, {}, "omega_scaling", {}};

    for (double x : grid) {
        const double hy = d.quantile(x);
        const double h = envelope(x);
        if (!(h > 0.0) || !detail::within(hy, h)) {
            throw hypothesis_error("envelope H must be positive and dominate H_Y; fails at x = " +
                                       detail::format_number(x),
                                   hy, h);
        }
    }
    curve.checks.push_back({"envelope_dominates_quantile", true, 0.0, 0.0});

    double worst_ratio = 0.0;
    for (double delta : grid) {
        for (double x : grid) {
            const double lhs = envelope(1.0 - delta * (1.0 - x));
            const double rhs = omega(delta) * envelope(x);
            if (!detail::within(lhs, rhs)) {
                throw hypothesis_error("scaling condition H(1 - delta(1 - x)) <= omega(delta) H(x) fails at "
                                       "(delta, x) = (" +
                                           detail::format_number(delta) + ", " + detail::format_number(x) + ")",
                                       lhs, rhs);
            }
            worst_ratio = std::max(worst_ratio, lhs / rhs);
        }
    }
    curve.checks.push_back({"omega_scaling", true, worst_ratio, 1.0});

    for (double x : xs) {
        curve.values.push_back(envelope(x) * omega.integral());
    }
    return curve;
}

struct IncreaseProbe {
    /// Smallest T making Q(t) e^{-t^2/2p} <= T Q(s) e^{-s^2/2p} on the grid.
    double factor;
    double worst_s;
    double worst_t;
};

/// Probes the growth condition on Q over 0 < s < t on a dense grid reaching
/// past the largest requested t.
inline IncreaseProbe probe_increase_rate(const std::function<double(double)>& Q, double p, double t_max)
{
    const double hi = std::max(10.0, 2.0 * t_max);
    constexpr int n = 4000;
    std::vector<double> grid;
    grid.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        grid.push_back(1e-3 * std::pow(1.0 / 1e-3, static_cast<double>(i) / n));  // 1e-3 .. 1
    }
    for (int i = 0; i <= n; ++i) {
        grid.push_back(1.0 + (hi - 1.0) * static_cast<double>(i) / n);
    }
    double best_log = -std::numeric_limits<double>::infinity();
    double running_min = std::numeric_limits<double>::infinity();
    double argmin = grid.front();
    IncreaseProbe probe{1.0, grid.front(), grid.front()};
    for (double u : grid) {
        const double q = Q(u);
        if (!(q > 0.0) || !std::isfinite(q)) {
            throw hypothesis_error("Q must be positive and finite; Q(" + detail::format_number(u) + ") fails", q, 0.0);
        }
        const double f = std::log(q) - u * u / (2.0 * p);
        if (f - running_min > best_log) {
            best_log = f - running_min;
            probe.worst_s = argmin;
            probe.worst_t = u;
        }
        if (f < running_min) {
            running_min = f;
            argmin = u;
        }
    }
    probe.factor = std::exp(std::max(0.0, best_log));
    return probe;
}

/// Given P{Y > Q(t)} < gamma e^{-t^2/2} for all t, every dominated X obeys
/// P{X > pT/(p-1) Q(t)} <= gamma e^{-t^2/2}. Thresholds go in
/// curve.thresholds, bounds (clamped to [0,1]) in curve.values.
inline BoundCurve gaussian_transfer(const std::function<double(double)>& Q, double p, double T, double gamma,
                                    const std::vector<double>& ts)
{
    if (!(p > 1.0) || !(T >= 1.0) || !(gamma >= 1.0)) {
        throw std::invalid_argument("gaussian_transfer: need p > 1, T >= 1, gamma >= 1");
    }
    double t_max = 0.0;
    for (double t : ts) {
        if (!(t > 0.0)) {
            throw std::invalid_argument("gaussian_transfer: t values must be positive");
        }
        t_max = std::max(t_max, t);
    }
    const IncreaseProbe probe = probe_increase_rate(Q, p, t_max);
    const bool ok = probe.factor <= T * (1.0 + 1e-12);
    if (!ok) {
        throw hypothesis_error("growth condition on Q fails for (s, t) = (" + detail::format_number(probe.worst_s) +
                                   ", " + detail::format_number(probe.worst_t) + "): needs T >= " +
                                   detail::format_number(probe.factor),
                               probe.factor, T);
    }
    BoundCurve curve{ts, {}, CurveMeaning::tail_bound, {}, "gaussian_transfer", {}};
    curve.checks.push_back({"q_increase_rate", true, probe.factor, T});
    const double factor = p * T / (p - 1.0);
    for (double t : ts) {
        curve.thresholds.push_back(factor * Q(t));
        curve.values.push_back(std::clamp(gamma * std::exp(-0.5 * t * t), 0.0, 1.0));
    }
    return curve;
}

struct TailRatioBound {
    /// (1/x) int_0^x H*(u) du
    double t;
    /// min(1, R P{Y >= t}), bounding P{X > t}
    double bound;
    /// H*(x/R); the hypothesis is hypothesis_lhs >= t
    double hypothesis_lhs;
};

/// P{X > t} <= R P{Y >= t} at t = (1/x) int_0^x H*, provided
/// H*(x/R) >= t. Equality cases are accepted to relative 1e-9.
inline TailRatioBound tail_ratio_bound(const Distribution& d, double x, double R)
{
    detail::check_probability(x);
    if (!(R > 1.0)) {
        throw std::invalid_argument("tail_ratio_bound: R must exceed 1");
    }
    const double t = upper_average(d, x);
    const double lhs = d.upper_quantile(x / R);
    if (lhs < t - 1e-9 * std::max(1.0, std::abs(t))) {
        throw hypothesis_error("H*(x/R) >= (1/x) int_0^x H* fails at x = " + detail::format_number(x) +
                                   ", R = " + detail::format_number(R),
                               lhs, t);
    }
    return {t, std::min(1.0, R * d.survival_inclusive(t)), lhs};
}

/// Areas cut from {(u, y) : 0 < u < x, H*(x) <= y <= H*(u)} by the line
/// u = x/R and the level y = H*(x/R):
///   D  above H*(x/R), left of x/R (under the curve)
///   C  the rectangle [0, x/R] x [H*(x), H*(x/R)]
///   B  under the curve in [x/R, x] x [H*(x), H*(x/R)]
///   A  the rest of that box, above the curve
/// A + B + C is the box [0, x] x [H*(x), H*(x/R)], so C = (A + B + C)/R.
inline RegionAreas region_areas(const Distribution& d, double x, double R)
{
    detail::check_probability(x);
    if (!(R > 1.0)) {
        throw std::invalid_argument("region_areas: R must exceed 1");
    }
    const double u0 = x / R;
    const double h1 = d.upper_quantile(x);
    const double h2 = d.upper_quantile(u0);
    const double head = d.upper_integral(u0);
    const double body = d.upper_integral(x) - head;
    const double D = head - u0 * h2;
    const double C = u0 * (h2 - h1);
    const double B = body - (x - u0) * h1;
    const double A = (x - u0) * (h2 - h1) - B;
    return {A, B, C, D, x, R, h1, h2};
}

namespace detail {

/// Largest violation of H convex via second differences on (0,1).
inline std::optional<double> convexity_violation(const Distribution& d)
{
    constexpr int n = 400;
    for (int i = 1; i + 2 <= n; ++i) {
        const double a = d.quantile(static_cast<double>(i) / (n + 1));
        const double b = d.quantile(static_cast<double>(i + 1) / (n + 1));
        const double c = d.quantile(static_cast<double>(i + 2) / (n + 1));
        const double second = a - 2.0 * b + c;
        if (second < -1e-9 * (std::abs(a) + 2.0 * std::abs(b) + std::abs(c)) - 1e-12) {
            return static_cast<double>(i + 1) / (n + 1);
        }
    }
    // far upper tail, in the upper coordinate
    for (int k = 1; k < 40; ++k) {
        const double w = std::pow(2.0, -k);
        const double a = d.upper_quantile(1.5 * w);
        const double b = d.upper_quantile(w);
        const double c = d.upper_quantile(0.5 * w);
        // unequal spacing: slopes must increase toward the top
        const double left = (b - a) / (0.5 * w);
        const double right = (c - b) / (0.5 * w);
        if (right < left - 1e-9 * (std::abs(left) + std::abs(right)) - 1e-12) {
            return 1.0 - w;
        }
    }
    return std::nullopt;
}

struct RatioScan {
    double worst;
    double delta;
    double x;
    double y;
};

inline std::vector<double> geometric_levels(double lo, double hi, int n)
{
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    }
    return g;
}

inline RatioScan scan_regularity(const Distribution& d, double p, int n, double delta_min)
{
    const auto deltas = geometric_levels(delta_min, 0.99, n);
    const auto points = geometric_levels(1e-4, 0.99, n);
    RatioScan scan{0.0, 1.0, 0.0, 0.0};
    for (double delta : deltas) {
        const double scale = std::pow(delta, -1.0 / p);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t j = i + 1; j < points.size(); ++j) {
                const double x = points[i];
                const double y = points[j];
                const double num = std::abs(d.upper_quantile(delta * x) - d.upper_quantile(delta * y));
                const double den = scale * std::abs(d.upper_quantile(x) - d.upper_quantile(y));
                double ratio = 0.0;
                if (den > 0.0) {
                    ratio = num / den;
                } else if (num > 0.0) {
                    ratio = std::numeric_limits<double>::infinity();
                }
                if (ratio > scan.worst) {
                    scan = {ratio, delta, x, y};
                }
            }
        }
    }
    return scan;
}

}  // namespace detail

struct RegularityReport {
    double p;
    /// smallest T >= 1 consistent with the probe grid
    double T;
    bool regular;
    double T_coarse;
    double T_refined;
    /// H''/H' <= (1 + 1/p)/(1 - t) by finite differences; empty for atomic laws
    std::optional<bool> log_derivative_condition;
    /// H'(1 - delta(1 - x)) <= T delta^{-1-1/p} H'(x); empty for atomic laws
    std::optional<bool> derivative_scaling_condition;

    RegularityParams params() const { return {p, T}; }
};

/// Estimates the smallest T with
///   |H*(delta x) - H*(delta y)| <= T delta^{-1/p} |H*(x) - H*(y)|
/// over a geometric probe grid (grid^3 triples), then again on a doubled grid
/// reaching smaller delta. Growth under refinement marks the law not regular.
inline RegularityReport check_regularity(const Distribution& d, double p, int grid = 20)
{
    if (!(p > 1.0)) {
        throw std::invalid_argument("check_regularity: p must exceed 1");
    }
    const auto coarse = detail::scan_regularity(d, p, grid, 1e-6);
    const auto refined = detail::scan_regularity(d, p, 2 * grid, 1e-8);
    RegularityReport report{};
    report.p = p;
    report.T_coarse = std::max(1.0, coarse.worst);
    report.T_refined = std::max(1.0, refined.worst);
    report.T = std::max(report.T_coarse, report.T_refined);
    report.regular = std::isfinite(report.T) && report.T_refined <= report.T_coarse * (1.0 + 1e-6) + 1e-9;

    if (!d.has_atoms() && std::isfinite(report.T)) {
        // derivatives of H at t = 1 - w, expressed through H*(w)
        auto slope = [&](double w) {
            const double h = 1e-4 * w;
            return (d.upper_quantile(w - h) - d.upper_quantile(w + h)) / (2.0 * h);
        };
        auto curvature = [&](double w) {
            const double h = 1e-4 * w;
            return (d.upper_quantile(w - h) - 2.0 * d.upper_quantile(w) + d.upper_quantile(w + h)) / (h * h);
        };
        bool log_ok = true;
        bool scaling_ok = true;
        const auto ws = detail::geometric_levels(1e-4, 0.9, grid);
        for (double w : ws) {
            const double s1 = slope(w);
            if (s1 > 0.0) {
                const double lhs = curvature(w) / s1;
                const double rhs = (1.0 + 1.0 / p) / w;
                log_ok = log_ok && lhs <= rhs * (1.0 + 1e-4) + 1e-9;
            }
            for (double delta : ws) {
                const double lhs = slope(delta * w);
                const double rhs = report.T * std::pow(delta, -1.0 - 1.0 / p) * s1;
                scaling_ok = scaling_ok && lhs <= rhs * (1.0 + 1e-4) + 1e-9;
            }
        }
        report.log_derivative_condition = log_ok;
        report.derivative_scaling_condition = scaling_ok;
    }
    return report;
}

struct GeometricCriterion {
    /// T <= (R - 1) R^{-1/p} / 2
    bool holds;
    double criterion_value;
    /// (R + 1) / ((R - 1)(R^{1-1/p}/T - 1)); D <= coefficient * A in the area argument
    double proof_coefficient;
    RegionAreas areas;
    /// H*(x/R) and (1/x) int_0^x H*
    double hypothesis_lhs;
    double hypothesis_rhs;
    /// D <= A + 1e-8, i.e. the tail-ratio hypothesis holds at x
    bool hypothesis_confirmed;
};

/// Sufficient geometric condition for the tail-ratio hypothesis. Requires H_Y
/// convex and the (p, T) regularity condition; both are probed first.
inline GeometricCriterion geometric_criterion(const Distribution& d, double x, double R,
                                              const RegularityParams& reg)
{
    detail::check_probability(x);
    if (!(R > 1.0)) {
        throw std::invalid_argument("geometric_criterion: R must exceed 1");
    }
    if (const auto bad = detail::convexity_violation(d)) {
        throw hypothesis_error("quantile function is not convex near x = " + detail::format_number(*bad), *bad, 0.0);
    }
    const auto scan = detail::scan_regularity(d, reg.p, 20, 1e-6);
    if (scan.worst > reg.T * (1.0 + 1e-9)) {
        throw hypothesis_error("regularity condition fails at (delta, x, y) = (" + detail::format_number(scan.delta) +
                                   ", " + detail::format_number(scan.x) + ", " + detail::format_number(scan.y) + ")",
                               scan.worst, reg.T);
    }

    GeometricCriterion out{};
    out.criterion_value = (R - 1.0) * std::pow(R, -1.0 / reg.p) / 2.0;
    out.holds = reg.T <= out.criterion_value;
    const double denom = (R - 1.0) * (std::pow(R, 1.0 - 1.0 / reg.p) / reg.T - 1.0);
    out.proof_coefficient = denom > 0.0 ? (R + 1.0) / denom : std::numeric_limits<double>::infinity();
    out.areas = region_areas(d, x, R);
    out.hypothesis_lhs = out.areas.level_x_R;
    out.hypothesis_rhs = upper_average(d, x);
    out.hypothesis_confirmed = out.areas.D <= out.areas.A + 1e-8;
    return out;
}

/// (1 - 1/r)^{-r} for r in (1, inf); e for r = inf.
inline double kemperman_constant(double r)
{
    if (!(r > 1.0)) {
        throw std::domain_error("kemperman_constant: r must exceed 1");
    }
    if (std::isinf(r)) {
        return std::numbers::e;
    }
    return std::exp(-r * std::log1p(-1.0 / r));
}

/// x^{-1/r} for finite r, -ln x for r = inf; +inf at x = 0.
inline double lambda_r(double r, double x)
{
    if (!(r > 0.0)) {
        throw std::domain_error("lambda_r: r must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("lambda_r: x must lie in [0,1]");
    }
    if (x == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::isinf(r) ? -std::log(x) : std::pow(x, -1.0 / r);
}

struct KempermanCheck {
    bool convex;
    /// (t0, t1, t2) where slopes decrease, if any
    std::optional<std::array<double, 3>> violation;
};

/// Convexity of t -> lambda_r(P{Y >= t}) on the sorted probe points ts.
inline KempermanCheck kemperman_criterion(const Distribution& d, double r, const std::vector<double>& ts)
{
    if (d.support_lower() < 0.0) {
        throw std::invalid_argument("kemperman_criterion: law must be supported on [0, inf)");
    }
    if (!std::is_sorted(ts.begin(), ts.end()) || std::adjacent_find(ts.begin(), ts.end()) != ts.end()) {
        throw std::invalid_argument("kemperman_criterion: probe points must be strictly increasing");
    }
    std::vector<double> L;
    L.reserve(ts.size());
    for (double t : ts) {
        L.push_back(lambda_r(r, d.survival_inclusive(t)));
    }
    for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
        if (!std::isfinite(L[i + 1])) {
            break;  // +inf from here on is allowed for a convex extended function
        }
        const double left = (L[i] - L[i - 1]) / (ts[i] - ts[i - 1]);
        const double right = (L[i + 1] - L[i]) / (ts[i + 1] - ts[i]);
        if (right < left - 1e-9 * std::max({1.0, std::abs(left), std::abs(right)})) {
            return {false, std::array<double, 3>{ts[i - 1], ts[i], ts[i + 1]}};
        }
    }
    return {true, std::nullopt};
}

}  // namespace convex_tail
