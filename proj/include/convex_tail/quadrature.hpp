#pragma once

// Adaptive quadrature used throughout the library. Smooth pieces go through
// an adaptive Gauss-Kronrod rule; integrable endpoint singularities are
// handled by dyadic splitting toward the singular end.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "convex_tail/errors.hpp"

namespace convex_tail::quadrature {

inline constexpr double relative_tolerance = 1e-10;
inline constexpr int max_dyadic_splits = 60;

namespace detail {

// Gauss-Kronrod 7/15 abscissas and weights on [-1, 1].
inline constexpr double kronrod_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kronrod_weights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Estimate {
    double value;
    double error;
    double magnitude;  // integral of |f|, for the roundoff floor
};

template <class F>
Estimate kronrod15(F& f, double a, double b)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    double magnitude = std::abs(fc) * kronrod_weights[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kronrod_weights[j] * (f1 + f2);
        magnitude += kronrod_weights[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) {
            gauss += gauss_weights[j / 2] * (f1 + f2);
        }
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half), magnitude * std::abs(half)};
}

template <class F>
double adaptive(F& f, double a, double b, const Estimate& whole, double tolerance, int depth)
{
    const double floor = 50.0 * std::numeric_limits<double>::epsilon() * whole.magnitude;
    if (whole.error <= std::max(tolerance * std::abs(whole.value), floor) || depth == 0) {
        return whole.value;
    }
    const double mid = 0.5 * (a + b);
    const Estimate left = kronrod15(f, a, mid);
    const Estimate right = kronrod15(f, mid, b);
    return adaptive(f, a, mid, left, tolerance, depth - 1) + adaptive(f, mid, b, right, tolerance, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) on a finite interval, relative tolerance
/// 1e-12 per panel. Endpoints are never evaluated, so f may be undefined
/// there.
template <class F>
double integrate(F&& f, double a, double b)
{
    if (!(a < b)) {
        return 0.0;
    }
    const detail::Estimate whole = detail::kronrod15(f, a, b);
    const double value = detail::adaptive(f, a, b, whole, 1e-12, 30);
    if (!std::isfinite(value)) {
        throw divergent_integral("non-finite quadrature result on [" + std::to_string(a) + ", " +
                                 std::to_string(b) + "]");
    }
    return value;
}

/// Integral of f over (0, length] where f may blow up (integrably) at 0.
///
/// The interval is cut at length * 2^-k, k <= 60. Once successive dyadic
/// pieces shrink geometrically, the remaining mass below the last cut is
/// estimated as a geometric series; this is exact for power-law
/// singularities. A piece ratio >= 1 at the deepest split means divergence.
template <class F>
double integrate_singular_left(F&& f, double length)
{
    if (!(length > 0.0)) {
        return 0.0;
    }
    double total = 0.0;
    double previous = std::numeric_limits<double>::quiet_NaN();
    double hi = length;
    double piece = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < max_dyadic_splits; ++k) {
        const double lo = 0.5 * hi;
        piece = integrate(f, lo, hi);
        total += piece;
        hi = lo;
        if (k < 2) {
            previous = piece;
            continue;
        }
        if (piece == 0.0 && previous == 0.0) {
            return total;
        }
        ratio = piece / previous;
        if (ratio > 0.0 && ratio < 1.0) {
            const double remainder = piece * ratio / (1.0 - ratio);
            if (std::abs(remainder) <= 1e-13 * std::abs(total)) {
                return total + remainder;
            }
        }
        previous = piece;
    }
    if (ratio > 0.0 && ratio < 1.0) {
        return total + piece * ratio / (1.0 - ratio);
    }
    if (std::abs(piece) <= 1e-12 * std::abs(total)) {
        return total;
    }
    throw divergent_integral("integral does not converge at the singular endpoint");
}

}  // namespace convex_tail::quadrature
