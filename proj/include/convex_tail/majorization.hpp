#pragma once

// Tail comparison under the increasing convex order: the optimal hinge
// (Markov-type) function, the sharp conditional-tail bound, the extremal law
// that attains it, and a stop-loss certificate for the order itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "convex_tail/distribution.hpp"
#include "convex_tail/errors.hpp"

namespace convex_tail {

struct HingeMinimizer {
    HingeFunction hinge;
    /// E phi(Y) / phi(t); phi(t) = 1 for a hinge anchored at t.
    double objective;
    /// t - 1/a
    double kink;
    /// P{Y > kink}; equals the objective at the minimizer.
    double tail_at_kink;
};

struct SharpBound {
    double s;
    /// E(Y : Y > s); equal to s when degenerate.
    double threshold;
    /// P{Y > s}; zero when degenerate, meaning P{X > s} = 0.
    double bound;
    bool degenerate;
};

struct OrderCheckReport {
    bool dominated;
    double worst_t;
    /// max over the grid of E(X - t)_+ - E(Y - t)_+
    double worst_slack;
    std::size_t grid_size;
    double tolerance;
};

/// Minimizer of E phi(Y) / phi(t) over non-negative convex phi strictly
/// increasing past t. The optimum is a hinge max{0, a(x - t) + 1} whose slope
/// solves E[(Y - t); Y > t - 1/a] = 0.
///
/// Requires a non-atomic law, t > E Y and P{Y > t} > 0. The map
/// a -> E[(Y - t); Y > t - 1/a] is non-decreasing, so the root is found by
/// bisection after geometric bracketing from a = 1. Where the root set is an
/// interval the left end is returned.
inline HingeMinimizer optimal_hinge(const Distribution& d, double t)
{
    if (d.has_atoms()) {
        throw std::invalid_argument("optimal_hinge: law must be non-atomic");
    }
    if (!(t > d.mean())) {
        throw std::invalid_argument("optimal_hinge: t must exceed the mean");
    }
    if (!(d.survival(t) > probability_tolerance)) {
        throw std::invalid_argument("optimal_hinge: P{Y > t} must be positive");
    }

    auto derivative = [&](double a) {
        const double c = t - 1.0 / a;
        return d.stop_loss(c) + (c - t) * d.survival(c);
    };

    double lo = 1.0;
    double hi = 1.0;
    constexpr int max_doublings = 200;
    if (derivative(1.0) < 0.0) {
        int n = 0;
        while (derivative(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (++n > max_doublings) {
                throw numerical_error("optimal_hinge: no sign change within 200 doublings");
            }
        }
    } else {
        int n = 0;
        while (derivative(lo) >= 0.0) {
            hi = lo;
            lo *= 0.5;
            if (++n > max_doublings) {
                throw numerical_error("optimal_hinge: no sign change within 200 halvings");
            }
        }
    }

    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (derivative(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    const HingeFunction hinge(t, hi);
    return {hinge, hinge.expectation(d), hinge.kink(), d.survival(hinge.kink())};
}

/// P{X >= E(Y : Y > s)} <= P{Y > s} for every X below Y in the increasing
/// convex order. When P{Y > s} = 0 the bound degenerates to P{X > s} = 0.
inline SharpBound sharp_tail_bound(const Distribution& d, double s)
{
    const double tail = d.survival(s);
    if (tail <= probability_tolerance) {
        return {s, s, 0.0, true};
    }
    const TailExpectation te = tail_expectation(d, s, true);
    return {s, te.value, te.tail_prob, false};
}

/// X = Y on {Y < s}, X = E(Y : Y >= s) on {Y >= s}. Jensen puts X below Y in
/// the convex order, and X attains the tail bound with equality.
inline Distribution extremal_construction(const Distribution& d, double s)
{
    const TailExpectation te = tail_expectation(d, s, false);
    if (d.has_atoms()) {
        std::vector<Atom> atoms;
        for (const Atom& a : d.atoms()) {
            if (a.value < s) {
                atoms.push_back(a);
            }
        }
        // continuous mass below s (grid kinds) is kept through the spliced form
        double below = 0.0;
        for (const Atom& a : atoms) {
            below += a.probability;
        }
        if (std::abs(below + te.tail_prob - 1.0) <= 1e-12) {
            atoms.push_back({te.value, te.tail_prob});
            return Distribution::atomic_mixture(std::move(atoms));
        }
    }
    return Distribution::spliced(d, s, te.tail_prob, te.value);
}

/// Thresholds on which stop-loss transforms are compared: half uniform over
/// the bulk, half clustered toward the top of the support, plus every atom.
inline std::vector<double> stop_loss_grid(const Distribution& x, const Distribution& y, std::size_t grid)
{
    grid = std::max<std::size_t>(grid, 4);
    const std::size_t half = grid / 2;
    auto lower_end = [](const Distribution& d) {
        const double lo = d.support_lower();
        return std::isfinite(lo) ? lo : d.quantile(1e-9);
    };
    const double lo = std::min(lower_end(x), lower_end(y));
    const double top = std::max(x.support_upper(), y.support_upper());
    const double bulk_hi =
        std::isfinite(top) ? top : std::max(x.upper_quantile(1e-3), y.upper_quantile(1e-3));

    std::vector<double> ts;
    ts.reserve(2 * grid);
    for (std::size_t i = 0; i < half; ++i) {
        ts.push_back(lo + (bulk_hi - lo) * static_cast<double>(i) / static_cast<double>(half - 1));
    }
    if (std::isfinite(top)) {
        const double span = top - lo;
        for (std::size_t k = 1; k <= grid - half; ++k) {
            const double frac = std::pow(1e-12, static_cast<double>(k) / static_cast<double>(grid - half));
            ts.push_back(top - span * frac);
        }
    } else {
        for (std::size_t k = 0; k < grid - half; ++k) {
            const double v = 1e-3 * std::pow(1e-9, static_cast<double>(k) / static_cast<double>(grid - half - 1));
            ts.push_back(y.upper_quantile(v));
            ts.push_back(x.upper_quantile(v));
        }
    }
    for (const Distribution* d : {&x, &y}) {
        for (const Atom& a : d->atoms()) {
            ts.push_back(a.value);
        }
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

/// Numerical certificate for X below Y in the increasing convex order:
/// E(X - t)_+ <= E(Y - t)_+ + tolerance on the stop-loss grid.
inline OrderCheckReport icx_dominates(const Distribution& x, const Distribution& y, std::size_t grid = 512,
                                      double tolerance = 1e-9)
{
    const std::vector<double> ts = stop_loss_grid(x, y, grid);
    double worst = -std::numeric_limits<double>::infinity();
    double worst_t = ts.front();
    for (double t : ts) {
        const double slack = x.stop_loss(t) - y.stop_loss(t);
        if (slack > worst) {
            worst = slack;
            worst_t = t;
        }
    }
    return {worst <= tolerance, worst_t, worst, ts.size(), tolerance};
}

}  // namespace convex_tail
