#pragma once

// Univariate laws and the quantile / tail primitives built on them.
//
// A Distribution is an immutable handle; copies share the underlying law.
// Every law is described through its quantile function H (left-continuous,
// non-decreasing on (0,1)) and its upper quantile H*(v) = H(1 - v). Integrals
// of H* over (0, v] are the workhorse: E[Y; Y > s] = int_0^{P(Y>s)} H*(w) dw,
// and likewise for the stop-loss transform and all the averaged envelopes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "convex_tail/errors.hpp"
#include "convex_tail/quadrature.hpp"

namespace convex_tail {

/// Probabilities at or below this are treated as zero when deciding whether a
/// tail event is empty.
inline constexpr double probability_tolerance = 1e-12;

struct Atom {
    double value;
    double probability;
};

enum class Kind {
    normal,
    exponential,
    uniform,
    pareto,
    lognormal,
    empirical,
    quantile_grid,
    atomic_mixture,
    spliced,
    shifted,
};

namespace detail {
struct Law;
}

class Distribution {
public:
    static Distribution normal(double mean, double stddev);
    static Distribution exponential(double rate);
    static Distribution uniform(double lo, double hi);
    /// Pareto with survival (scale / t)^exponent for t >= scale. exponent > 1.
    static Distribution pareto(double exponent, double scale);
    static Distribution lognormal(double mu, double sigma);
    static Distribution empirical(std::vector<double> sample);
    /// Piecewise-linear quantile through (x_i, H(x_i)); the boundary segments
    /// extend linearly to x = 0 and x = 1.
    static Distribution quantile_grid(std::vector<double> xs, std::vector<double> hs);
    static Distribution atomic_mixture(std::vector<Atom> atoms);
    /// Law of Y 1{Y < cut} + atom 1{Y >= cut}, where tail_mass = P{Y >= cut}.
    static Distribution spliced(Distribution base, double cut, double tail_mass, double atom);
    /// Law of Y + delta.
    static Distribution shifted(Distribution base, double delta);

    Kind kind() const;
    std::string describe() const;

    /// H(x) = inf{t : F(t) >= x}. Throws std::domain_error outside (0,1).
    double quantile(double x) const;
    /// H*(v) = H(1 - v), evaluated without forming 1 - v where possible.
    double upper_quantile(double v) const;

    double cdf(double t) const;
    /// P{Y > t}
    double survival(double t) const;
    /// P{Y >= t}
    double survival_inclusive(double t) const;

    double mean() const;
    /// E max{Y - t, 0}
    double stop_loss(double t) const;

    /// int_0^v H*(w) dw for v in [0,1].
    double upper_integral(double v) const;
    /// int_0^x H(u) du for x in [0,1].
    double lower_integral(double x) const;

    /// Atoms in increasing order of value; empty for non-atomic laws.
    std::vector<Atom> atoms() const;
    bool has_atoms() const { return !atoms().empty(); }

    double support_lower() const;
    double support_upper() const;

private:
    explicit Distribution(std::shared_ptr<const detail::Law> law) : law_(std::move(law)) {}

    std::shared_ptr<const detail::Law> law_;
};

namespace detail {

inline void check_probability(double x)
{
    if (!(x > 0.0 && x < 1.0)) {
        throw std::domain_error("probability argument must lie in (0,1), got " + std::to_string(x));
    }
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double std_normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
inline double std_normal_pdf(double z)
{
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}
inline double std_normal_quantile(double x)
{
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * x);
}
/// Phi^{-1}(1 - v)
inline double std_normal_upper_quantile(double v)
{
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * v);
}

struct Normal {
    double mean;
    double stddev;
};
struct Exponential {
    double rate;
};
struct Uniform {
    double lo;
    double hi;
};
struct Pareto {
    double exponent;
    double scale;
};
struct LogNormal {
    double mu;
    double sigma;
};

/// Sorted, merged atoms with prefix/suffix masses and moments.
struct AtomTable {
    std::vector<double> values;
    std::vector<double> masses;
    std::vector<double> head;         // head[j] = P{Y <= values[j]}
    std::vector<double> tail;         // tail[j] = P{Y >= values[j]}, tail[n] = 0
    std::vector<double> head_moment;  // sum_{i<j} p_i v_i, size n+1
    std::vector<double> tail_moment;  // sum_{i>=j} p_i v_i, size n+1

    std::size_t size() const { return values.size(); }

    static AtomTable from_atoms(std::vector<Atom> atoms)
    {
        std::sort(atoms.begin(), atoms.end(),
                  [](const Atom& a, const Atom& b) { return a.value < b.value; });
        AtomTable t;
        for (const Atom& a : atoms) {
            if (!t.values.empty() && t.values.back() == a.value) {
                t.masses.back() += a.probability;
            } else {
                t.values.push_back(a.value);
                t.masses.push_back(a.probability);
            }
        }
        const std::size_t n = t.values.size();
        t.head.resize(n);
        t.tail.assign(n + 1, 0.0);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += t.masses[j];
            t.head[j] = acc;
        }
        for (std::size_t j = n; j-- > 0;) {
            t.tail[j] = t.tail[j + 1] + t.masses[j];
        }
        t.finish_moments();
        return t;
    }

    /// Ties merged with exact count/n masses so that quantile breakpoints sit
    /// exactly at j/n.
    static AtomTable from_sample(std::vector<double> sample)
    {
        std::sort(sample.begin(), sample.end());
        const double n = static_cast<double>(sample.size());
        AtomTable t;
        std::vector<std::size_t> counts;
        for (double v : sample) {
            if (!t.values.empty() && t.values.back() == v) {
                ++counts.back();
            } else {
                t.values.push_back(v);
                counts.push_back(1);
            }
        }
        const std::size_t m = t.values.size();
        t.masses.resize(m);
        t.head.resize(m);
        t.tail.assign(m + 1, 0.0);
        std::size_t below = 0;
        for (std::size_t j = 0; j < m; ++j) {
            t.masses[j] = static_cast<double>(counts[j]) / n;
            t.tail[j] = static_cast<double>(sample.size() - below) / n;
            below += counts[j];
            t.head[j] = static_cast<double>(below) / n;
        }
        t.finish_moments();
        return t;
    }

    void finish_moments()
    {
        const std::size_t n = values.size();
        head_moment.assign(n + 1, 0.0);
        tail_moment.assign(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            head_moment[j + 1] = head_moment[j] + masses[j] * values[j];
        }
        for (std::size_t j = n; j-- > 0;) {
            tail_moment[j] = tail_moment[j + 1] + masses[j] * values[j];
        }
    }

    std::size_t quantile_index(double x) const
    {
        const auto it = std::lower_bound(head.begin(), head.end(), x);
        return std::min<std::size_t>(static_cast<std::size_t>(it - head.begin()), size() - 1);
    }

    // smallest j with P{Y > values[j]} <= v
    std::size_t upper_quantile_index(double v) const
    {
        std::size_t lo = 0;
        std::size_t hi = size() - 1;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (tail[mid + 1] <= v) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return lo;
    }

    double quantile(double x) const { return values[quantile_index(x)]; }
    double upper_quantile(double v) const { return values[upper_quantile_index(v)]; }

    double cdf(double t) const
    {
        const auto k = static_cast<std::size_t>(
            std::upper_bound(values.begin(), values.end(), t) - values.begin());
        return k == 0 ? 0.0 : head[k - 1];
    }
    double survival(double t) const
    {
        const auto k = static_cast<std::size_t>(
            std::upper_bound(values.begin(), values.end(), t) - values.begin());
        return tail[k];
    }
    double survival_inclusive(double t) const
    {
        const auto k = static_cast<std::size_t>(
            std::lower_bound(values.begin(), values.end(), t) - values.begin());
        return tail[k];
    }
    double stop_loss(double t) const
    {
        const auto k = static_cast<std::size_t>(
            std::upper_bound(values.begin(), values.end(), t) - values.begin());
        return std::max(0.0, tail_moment[k] - t * tail[k]);
    }
    double upper_integral(double v) const
    {
        if (v <= 0.0) {
            return 0.0;
        }
        if (v >= 1.0) {
            return tail_moment[0];
        }
        const std::size_t j = upper_quantile_index(v);
        return tail_moment[j + 1] + (v - tail[j + 1]) * values[j];
    }
    double lower_integral(double x) const
    {
        if (x <= 0.0) {
            return 0.0;
        }
        if (x >= 1.0) {
            return head_moment[size()];
        }
        const std::size_t j = quantile_index(x);
        const double below = j == 0 ? 0.0 : head[j - 1];
        return head_moment[j] + (x - below) * values[j];
    }
    std::vector<Atom> atoms() const
    {
        std::vector<Atom> out;
        out.reserve(size());
        for (std::size_t j = 0; j < size(); ++j) {
            out.push_back({values[j], masses[j]});
        }
        return out;
    }
};

struct Empirical {
    AtomTable table;
    std::size_t sample_size;
};

struct AtomicMixture {
    AtomTable table;
};

/// Piecewise-linear quantile function on [0,1]; nodes include the linear
/// extensions to x = 0 and x = 1.
struct QuantileGrid {
    std::vector<double> xs;
    std::vector<double> hs;
    std::vector<double> suffix;  // suffix[i] = int_{xs[i]}^1 H
    std::vector<double> knots_x;
    std::vector<double> knots_h;

    std::size_t segment_of(double x) const
    {
        // i with xs[i] < x <= xs[i+1]
        const auto it = std::lower_bound(xs.begin(), xs.end(), x);
        const auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin(), 1));
        return std::min(j, xs.size() - 1) - 1;
    }
    double at(double x) const
    {
        const std::size_t i = segment_of(x);
        const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return hs[i] + w * (hs[i + 1] - hs[i]);
    }
    double upper_at(double v) const
    {
        const double x = 1.0 - v;
        const std::size_t i = segment_of(x);
        // interpolate from the right node to keep precision for small v
        const double w = (xs[i + 1] - x) / (xs[i + 1] - xs[i]);
        return hs[i + 1] - w * (hs[i + 1] - hs[i]);
    }
    double cdf(double t) const
    {
        if (t < hs.front()) {
            return 0.0;
        }
        if (t >= hs.back()) {
            return 1.0;
        }
        const auto j = static_cast<std::size_t>(std::upper_bound(hs.begin(), hs.end(), t) - hs.begin());
        return xs[j - 1] + (t - hs[j - 1]) / (hs[j] - hs[j - 1]) * (xs[j] - xs[j - 1]);
    }
    double below(double t) const  // P{Y < t}
    {
        if (t <= hs.front()) {
            return 0.0;
        }
        if (t > hs.back()) {
            return 1.0;
        }
        const auto j = static_cast<std::size_t>(std::lower_bound(hs.begin(), hs.end(), t) - hs.begin());
        return xs[j - 1] + (t - hs[j - 1]) / (hs[j] - hs[j - 1]) * (xs[j] - xs[j - 1]);
    }
    double upper_integral(double v) const
    {
        if (v <= 0.0) {
            return 0.0;
        }
        if (v >= 1.0) {
            return suffix.front();
        }
        const double x = 1.0 - v;
        const std::size_t i = segment_of(x);
        return suffix[i + 1] + (xs[i + 1] - x) * 0.5 * (upper_at(v) + hs[i + 1]);
    }
    double lower_integral(double x) const
    {
        if (x <= 0.0) {
            return 0.0;
        }
        if (x >= 1.0) {
            return suffix.front();
        }
        const std::size_t i = segment_of(x);
        return (suffix.front() - suffix[i]) + (x - xs[i]) * 0.5 * (hs[i] + at(x));
    }
    std::vector<Atom> atoms() const
    {
        std::vector<Atom> out;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            if (hs[i] == hs[i + 1]) {
                const double mass = xs[i + 1] - xs[i];
                if (!out.empty() && out.back().value == hs[i]) {
                    out.back().probability += mass;
                } else {
                    out.push_back({hs[i], mass});
                }
            }
        }
        return out;
    }
};

struct Spliced {
    Distribution base;
    double cut;
    double tail_mass;
    double atom;
};

struct Shifted {
    Distribution base;
    double delta;
};

struct Law {
    std::variant<Normal, Exponential, Uniform, Pareto, LogNormal, Empirical, QuantileGrid,
                 AtomicMixture, Spliced, Shifted>
        kind;
};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class T>
inline constexpr bool is_continuous_parametric =
    std::is_same_v<T, Normal> || std::is_same_v<T, Exponential> || std::is_same_v<T, Uniform> ||
    std::is_same_v<T, Pareto> || std::is_same_v<T, LogNormal>;

inline double parametric_quantile(const Normal& d, double x)
{
    return d.mean + d.stddev * std_normal_quantile(x);
}
inline double parametric_upper_quantile(const Normal& d, double v)
{
    return d.mean + d.stddev * std_normal_upper_quantile(v);
}
inline double parametric_quantile(const Exponential& d, double x) { return -std::log1p(-x) / d.rate; }
inline double parametric_upper_quantile(const Exponential& d, double v) { return -std::log(v) / d.rate; }
inline double parametric_quantile(const Uniform& d, double x) { return d.lo + x * (d.hi - d.lo); }
inline double parametric_upper_quantile(const Uniform& d, double v) { return d.hi - v * (d.hi - d.lo); }
inline double parametric_quantile(const Pareto& d, double x)
{
    return d.scale * std::exp(-std::log1p(-x) / d.exponent);
}
inline double parametric_upper_quantile(const Pareto& d, double v)
{
    return d.scale * std::pow(v, -1.0 / d.exponent);
}
inline double parametric_quantile(const LogNormal& d, double x)
{
    return std::exp(d.mu + d.sigma * std_normal_quantile(x));
}
inline double parametric_upper_quantile(const LogNormal& d, double v)
{
    return std::exp(d.mu + d.sigma * std_normal_upper_quantile(v));
}

// Quadrature over the quantile function, split at 1/2 so that each half is
// integrated in the coordinate where its singular end sits at 0.
template <class D>
double parametric_lower_piece(const D& d, double x)
{
    return quadrature::integrate_singular_left([&](double u) { return parametric_quantile(d, u); }, x);
}
template <class D>
double parametric_upper_piece(const D& d, double v)
{
    return quadrature::integrate_singular_left(
        [&](double w) { return parametric_upper_quantile(d, w); }, v);
}
template <class D>
double parametric_upper_integral(const D& d, double v)
{
    if (v <= 0.0) {
        return 0.0;
    }
    if (v <= 0.5) {
        return parametric_upper_piece(d, v);
    }
    const double lower_half = parametric_lower_piece(d, 0.5);
    const double rest = v >= 1.0 ? 0.0 : parametric_lower_piece(d, 1.0 - v);
    return parametric_upper_piece(d, 0.5) + lower_half - rest;
}
template <class D>
double parametric_lower_integral(const D& d, double x)
{
    if (x <= 0.0) {
        return 0.0;
    }
    if (x <= 0.5) {
        return parametric_lower_piece(d, x);
    }
    const double upper_half = parametric_upper_piece(d, 0.5);
    const double rest = x >= 1.0 ? 0.0 : parametric_upper_piece(d, 1.0 - x);
    return parametric_lower_piece(d, 0.5) + upper_half - rest;
}

inline double parametric_cdf(const Normal& d, double t) { return std_normal_cdf((t - d.mean) / d.stddev); }
inline double parametric_sf(const Normal& d, double t) { return std_normal_sf((t - d.mean) / d.stddev); }
inline double parametric_cdf(const Exponential& d, double t)
{
    return t <= 0.0 ? 0.0 : -std::expm1(-d.rate * t);
}
inline double parametric_sf(const Exponential& d, double t) { return t <= 0.0 ? 1.0 : std::exp(-d.rate * t); }
inline double parametric_cdf(const Uniform& d, double t)
{
    return std::clamp((t - d.lo) / (d.hi - d.lo), 0.0, 1.0);
}
inline double parametric_sf(const Uniform& d, double t)
{
    return std::clamp((d.hi - t) / (d.hi - d.lo), 0.0, 1.0);
}
inline double parametric_sf(const Pareto& d, double t)
{
    return t <= d.scale ? 1.0 : std::pow(d.scale / t, d.exponent);
}
inline double parametric_cdf(const Pareto& d, double t)
{
    return t <= d.scale ? 0.0 : -std::expm1(d.exponent * std::log(d.scale / t));
}
inline double parametric_cdf(const LogNormal& d, double t)
{
    return t <= 0.0 ? 0.0 : std_normal_cdf((std::log(t) - d.mu) / d.sigma);
}
inline double parametric_sf(const LogNormal& d, double t)
{
    return t <= 0.0 ? 1.0 : std_normal_sf((std::log(t) - d.mu) / d.sigma);
}

inline double parametric_mean(const Normal& d) { return d.mean; }
inline double parametric_mean(const Exponential& d) { return 1.0 / d.rate; }
inline double parametric_mean(const Uniform& d) { return 0.5 * (d.lo + d.hi); }
inline double parametric_mean(const Pareto& d) { return d.exponent * d.scale / (d.exponent - 1.0); }
inline double parametric_mean(const LogNormal& d) { return std::exp(d.mu + 0.5 * d.sigma * d.sigma); }

inline double parametric_stop_loss(const Normal& d, double t)
{
    const double z = (t - d.mean) / d.stddev;
    return d.stddev * std::max(0.0, std_normal_pdf(z) - z * std_normal_sf(z));
}
inline double parametric_stop_loss(const Exponential& d, double t)
{
    return t < 0.0 ? 1.0 / d.rate - t : std::exp(-d.rate * t) / d.rate;
}
inline double parametric_stop_loss(const Uniform& d, double t)
{
    if (t <= d.lo) {
        return parametric_mean(d) - t;
    }
    if (t >= d.hi) {
        return 0.0;
    }
    return (d.hi - t) * (d.hi - t) / (2.0 * (d.hi - d.lo));
}
inline double parametric_stop_loss(const Pareto& d, double t)
{
    if (t <= d.scale) {
        return parametric_mean(d) - t;
    }
    return t * std::pow(d.scale / t, d.exponent) / (d.exponent - 1.0);
}
inline double parametric_stop_loss(const LogNormal& d, double t)
{
    if (t <= 0.0) {
        return parametric_mean(d) - t;
    }
    const double z = (std::log(t) - d.mu) / d.sigma;
    return std::max(0.0, parametric_mean(d) * std_normal_sf(z - d.sigma) - t * std_normal_sf(z));
}

inline std::pair<double, double> parametric_support(const Normal&)
{
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}
inline std::pair<double, double> parametric_support(const Exponential&)
{
    return {0.0, std::numeric_limits<double>::infinity()};
}
inline std::pair<double, double> parametric_support(const Uniform& d) { return {d.lo, d.hi}; }
inline std::pair<double, double> parametric_support(const Pareto& d)
{
    return {d.scale, std::numeric_limits<double>::infinity()};
}
inline std::pair<double, double> parametric_support(const LogNormal&)
{
    return {0.0, std::numeric_limits<double>::infinity()};
}

inline std::string format_number(double v)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

inline Distribution Distribution::normal(double mean, double stddev)
{
    if (!(stddev > 0.0) || !std::isfinite(mean) || !std::isfinite(stddev)) {
        throw std::invalid_argument("normal: stddev must be positive and parameters finite");
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{detail::Normal{mean, stddev}}));
}

inline Distribution Distribution::exponential(double rate)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("exponential: rate must be positive");
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{detail::Exponential{rate}}));
}

inline Distribution Distribution::uniform(double lo, double hi)
{
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("uniform: need finite lo < hi");
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{detail::Uniform{lo, hi}}));
}

inline Distribution Distribution::pareto(double exponent, double scale)
{
    if (!(exponent > 1.0)) {
        throw std::invalid_argument("pareto: exponent must exceed 1 (infinite upper-tail mean otherwise)");
    }
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(exponent)) {
        throw std::invalid_argument("pareto: scale must be positive");
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{detail::Pareto{exponent, scale}}));
}

inline Distribution Distribution::lognormal(double mu, double sigma)
{
    if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
        throw std::invalid_argument("lognormal: sigma must be positive");
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{detail::LogNormal{mu, sigma}}));
}

inline Distribution Distribution::empirical(std::vector<double> sample)
{
    if (sample.empty()) {
        throw std::invalid_argument("empirical: sample must be non-empty");
    }
    for (double v : sample) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("empirical: non-finite sample value");
        }
    }
    const std::size_t n = sample.size();
    return Distribution(std::make_shared<detail::Law>(
        detail::Law{detail::Empirical{detail::AtomTable::from_sample(std::move(sample)), n}}));
}

inline Distribution Distribution::quantile_grid(std::vector<double> xs, std::vector<double> hs)
{
    if (xs.size() != hs.size() || xs.size() < 2) {
        throw std::invalid_argument("quantile grid: need at least two (x, H(x)) knots");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0 && xs[i] < 1.0) || !std::isfinite(hs[i])) {
            throw std::invalid_argument("quantile grid: abscissas must lie in (0,1), ordinates finite");
        }
        if (i > 0 && !(xs[i] > xs[i - 1])) {
            throw std::invalid_argument("quantile grid: abscissas must be strictly increasing");
        }
        if (i > 0 && hs[i] < hs[i - 1]) {
            throw std::invalid_argument("quantile grid: ordinates must be non-decreasing");
        }
    }
    detail::QuantileGrid g;
    g.knots_x = xs;
    g.knots_h = hs;
    const std::size_t n = xs.size();
    const double first_slope = (hs[1] - hs[0]) / (xs[1] - xs[0]);
    const double last_slope = (hs[n - 1] - hs[n - 2]) / (xs[n - 1] - xs[n - 2]);
    g.xs.push_back(0.0);
    g.hs.push_back(hs[0] - first_slope * xs[0]);
    g.xs.insert(g.xs.end(), xs.begin(), xs.end());
    g.hs.insert(g.hs.end(), hs.begin(), hs.end());
    g.xs.push_back(1.0);
    g.hs.push_back(hs[n - 1] + last_slope * (1.0 - xs[n - 1]));
    if (!std::isfinite(g.hs.front()) || !std::isfinite(g.hs.back())) {
        throw std::invalid_argument("quantile grid: boundary extrapolation is not finite");
    }
    g.suffix.assign(g.xs.size(), 0.0);
    for (std::size_t i = g.xs.size() - 1; i-- > 0;) {
        g.suffix[i] = g.suffix[i + 1] + (g.xs[i + 1] - g.xs[i]) * 0.5 * (g.hs[i] + g.hs[i + 1]);
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{std::move(g)}));
}

inline Distribution Distribution::atomic_mixture(std::vector<Atom> atoms)
{
    if (atoms.empty()) {
        throw std::invalid_argument("atomic mixture: need at least one atom");
    }
    double total = 0.0;
    for (const Atom& a : atoms) {
        if (!(a.probability > 0.0) || !std::isfinite(a.value)) {
            throw std::invalid_argument("atomic mixture: probabilities must be positive, values finite");
        }
        total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("atomic mixture: probabilities sum to " + detail::format_number(total) +
                                    ", not 1");
    }
    return Distribution(std::make_shared<detail::Law>(
        detail::Law{detail::AtomicMixture{detail::AtomTable::from_atoms(std::move(atoms))}}));
}

inline Distribution Distribution::spliced(Distribution base, double cut, double tail_mass, double atom)
{
    if (!(tail_mass > 0.0 && tail_mass <= 1.0)) {
        throw std::invalid_argument("spliced: tail mass must lie in (0,1]");
    }
    if (!(atom >= cut) || !std::isfinite(atom)) {
        throw std::invalid_argument("spliced: atom must sit at or above the cut");
    }
    return Distribution(std::make_shared<detail::Law>(
        detail::Law{detail::Spliced{std::move(base), cut, tail_mass, atom}}));
}

inline Distribution Distribution::shifted(Distribution base, double delta)
{
    if (!std::isfinite(delta)) {
        throw std::invalid_argument("shifted: delta must be finite");
    }
    return Distribution(std::make_shared<detail::Law>(detail::Law{detail::Shifted{std::move(base), delta}}));
}

inline Kind Distribution::kind() const
{
    return static_cast<Kind>(law_->kind.index());
}

inline std::string Distribution::describe() const
{
    using detail::format_number;
    return std::visit(
        detail::overloaded{
            [](const detail::Normal& d) { return "normal:" + format_number(d.mean) + "," + format_number(d.stddev); },
            [](const detail::Exponential& d) { return "exp:" + format_number(d.rate); },
            [](const detail::Uniform& d) { return "uniform:" + format_number(d.lo) + "," + format_number(d.hi); },
            [](const detail::Pareto& d) {
                return "pareto:" + format_number(d.exponent) + "," + format_number(d.scale);
            },
            [](const detail::LogNormal& d) {
                return "lognormal:" + format_number(d.mu) + "," + format_number(d.sigma);
            },
            [](const detail::Empirical& d) { return "empirical(n=" + std::to_string(d.sample_size) + ")"; },
            [](const detail::QuantileGrid& d) {
                return "grid(" + std::to_string(d.knots_x.size()) + " knots)";
            },
            [](const detail::AtomicMixture& d) {
                std::string s = "atoms:";
                for (std::size_t j = 0; j < d.table.size(); ++j) {
                    if (j > 0) {
                        s += ",";
                    }
                    s += format_number(d.table.values[j]) + ":" + format_number(d.table.masses[j]);
                }
                return s;
            },
            [](const detail::Spliced& d) {
                return "spliced(" + d.base.describe() + " below " + format_number(d.cut) + ", atom " +
                       format_number(d.atom) + " mass " + format_number(d.tail_mass) + ")";
            },
            [](const detail::Shifted& d) {
                return "shifted(" + d.base.describe() + " by " + format_number(d.delta) + ")";
            },
        },
        law_->kind);
}

inline double Distribution::quantile(double x) const
{
    detail::check_probability(x);
    return std::visit(
        [x](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_quantile(d, x);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.quantile(x);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.at(x);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                return x > 1.0 - d.tail_mass ? d.atom : d.base.quantile(x);
            } else {
                return d.base.quantile(x) + d.delta;
            }
        },
        law_->kind);
}

inline double Distribution::upper_quantile(double v) const
{
    detail::check_probability(v);
    return std::visit(
        [v](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_upper_quantile(d, v);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.upper_quantile(v);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.upper_at(v);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                return v < d.tail_mass ? d.atom : d.base.upper_quantile(v);
            } else {
                return d.base.upper_quantile(v) + d.delta;
            }
        },
        law_->kind);
}

inline double Distribution::cdf(double t) const
{
    return std::visit(
        [t](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_cdf(d, t);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.cdf(t);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.cdf(t);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                if (t < d.cut) {
                    return d.base.cdf(t);
                }
                return t < d.atom ? 1.0 - d.tail_mass : 1.0;
            } else {
                return d.base.cdf(t - d.delta);
            }
        },
        law_->kind);
}

inline double Distribution::survival(double t) const
{
    return std::visit(
        [t](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_sf(d, t);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.survival(t);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return 1.0 - d.cdf(t);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                if (t < d.cut) {
                    return d.base.survival(t);
                }
                return t < d.atom ? d.tail_mass : 0.0;
            } else {
                return d.base.survival(t - d.delta);
            }
        },
        law_->kind);
}

inline double Distribution::survival_inclusive(double t) const
{
    return std::visit(
        [t](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_sf(d, t);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.survival_inclusive(t);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return 1.0 - d.below(t);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                if (t <= d.cut) {
                    return d.base.survival_inclusive(t);
                }
                return t <= d.atom ? d.tail_mass : 0.0;
            } else {
                return d.base.survival_inclusive(t - d.delta);
            }
        },
        law_->kind);
}

inline double Distribution::mean() const
{
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_mean(d);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.tail_moment[0];
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.suffix.front();
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                return d.base.mean();
            } else {
                return d.base.mean() + d.delta;
            }
        },
        law_->kind);
}

inline double Distribution::stop_loss(double t) const
{
    return std::visit(
        [t](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_stop_loss(d, t);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.stop_loss(t);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                const double tail = 1.0 - d.cdf(t);
                return std::max(0.0, d.upper_integral(tail) - t * tail);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                // Below the cut the collapsed tail keeps its mass and mean, so
                // the transform is untouched.
                if (t < d.cut) {
                    return d.base.stop_loss(t);
                }
                return d.tail_mass * std::max(0.0, d.atom - t);
            } else {
                return d.base.stop_loss(t - d.delta);
            }
        },
        law_->kind);
}

inline double Distribution::upper_integral(double v) const
{
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error("upper_integral: v must lie in [0,1]");
    }
    return std::visit(
        [v](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_upper_integral(d, v);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.upper_integral(v);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.upper_integral(v);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                if (v <= d.tail_mass) {
                    return v * d.atom;
                }
                return d.tail_mass * d.atom + d.base.upper_integral(v) - d.base.upper_integral(d.tail_mass);
            } else {
                return d.base.upper_integral(v) + d.delta * v;
            }
        },
        law_->kind);
}

inline double Distribution::lower_integral(double x) const
{
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("lower_integral: x must lie in [0,1]");
    }
    return std::visit(
        [x](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_lower_integral(d, x);
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.lower_integral(x);
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.lower_integral(x);
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                const double body = 1.0 - d.tail_mass;
                if (x <= body) {
                    return d.base.lower_integral(x);
                }
                return d.base.lower_integral(body) + (x - body) * d.atom;
            } else {
                return d.base.lower_integral(x) + d.delta * x;
            }
        },
        law_->kind);
}

inline std::vector<Atom> Distribution::atoms() const
{
    return std::visit(
        [](const auto& d) -> std::vector<Atom> {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return {};
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.atoms();
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.atoms();
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                std::vector<Atom> out;
                for (const Atom& a : d.base.atoms()) {
                    if (a.value < d.cut) {
                        out.push_back(a);
                    }
                }
                out.push_back({d.atom, d.tail_mass});
                return out;
            } else {
                std::vector<Atom> out = d.base.atoms();
                for (Atom& a : out) {
                    a.value += d.delta;
                }
                return out;
            }
        },
        law_->kind);
}

inline double Distribution::support_lower() const
{
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_support(d).first;
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.values.front();
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.hs.front();
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                return d.tail_mass >= 1.0 ? d.atom : std::min(d.base.support_lower(), d.atom);
            } else {
                return d.base.support_lower() + d.delta;
            }
        },
        law_->kind);
}

inline double Distribution::support_upper() const
{
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (detail::is_continuous_parametric<T>) {
                return detail::parametric_support(d).second;
            } else if constexpr (std::is_same_v<T, detail::Empirical> ||
                                 std::is_same_v<T, detail::AtomicMixture>) {
                return d.table.values.back();
            } else if constexpr (std::is_same_v<T, detail::QuantileGrid>) {
                return d.hs.back();
            } else if constexpr (std::is_same_v<T, detail::Spliced>) {
                return d.atom;
            } else {
                return d.base.support_upper() + d.delta;
            }
        },
        law_->kind);
}

// ---------------------------------------------------------------------------
// Free operations.

struct HingeFunction {
    double t;
    double a;

    HingeFunction(double shift, double slope) : t(shift), a(slope)
    {
        if (!(slope > 0.0)) {
            throw std::invalid_argument("hinge slope must be positive");
        }
    }

    /// max{0, a(x - t) + 1}
    double operator()(double x) const { return std::max(0.0, a * (x - t) + 1.0); }
    /// Point where the hinge leaves zero.
    double kink() const { return t - 1.0 / a; }
    /// E phi(Y) = a * E(Y - kink)_+
    double expectation(const Distribution& d) const { return a * d.stop_loss(kink()); }
};

struct TailExpectation {
    double s;
    double value;      // E(Y : Y > s) or E(Y : Y >= s)
    double tail_prob;  // matching P{Y > s} or P{Y >= s}
};

inline double quantile(const Distribution& d, double x) { return d.quantile(x); }
inline double upper_quantile(const Distribution& d, double x) { return d.upper_quantile(x); }
inline double cdf(const Distribution& d, double t) { return d.cdf(t); }
inline double stop_loss(const Distribution& d, double t) { return d.stop_loss(t); }

/// Conditional tail mean E(Y : Y > s) when strict, E(Y : Y >= s) otherwise.
/// Uses E[(Y - s)_+] = E[Y - s; Y > s], which is the same for both forms.
inline TailExpectation tail_expectation(const Distribution& d, double s, bool strict)
{
    const double tail = strict ? d.survival(s) : d.survival_inclusive(s);
    if (tail <= probability_tolerance) {
        throw empty_tail("tail event at s = " + detail::format_number(s) + " has probability zero");
    }
    return {s, s + d.stop_loss(s) / tail, tail};
}

/// (1/v) int_0^v H*(u) du: the average of the top-v fraction of the law.
inline double upper_average(const Distribution& d, double v)
{
    detail::check_probability(v);
    return d.upper_integral(v) / v;
}

/// (1/(1-x)) int_x^1 H(u) du
inline double upper_mean(const Distribution& d, double x)
{
    detail::check_probability(x);
    const double v = 1.0 - x;
    return d.upper_integral(v) / v;
}

/// Deterministic uniform draw strictly inside (0,1) from 53 random bits.
inline double open_unit(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// n i.i.d. draws by inverse transform.
inline std::vector<double> sample(const Distribution& d, std::size_t n, std::uint64_t seed)
{
    if (n == 0) {
        throw std::invalid_argument("sample: n must be at least 1");
    }
    std::mt19937_64 engine(seed);
    std::vector<double> out(n);
    for (double& v : out) {
        v = d.quantile(open_unit(engine()));
    }
    return out;
}

}  // namespace convex_tail
