#pragma once

// CSV and JSON renderings of curves, reports and atomic laws. Numbers are
// written with 17 significant digits in the classic locale.

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex_tail/distribution.hpp"
#include "convex_tail/envelope.hpp"
#include "convex_tail/oracle.hpp"

namespace convex_tail {

using detail::format_number;

inline void write_csv(std::ostream& os, const BoundCurve& curve)
{
    os << "x,value,meaning\n";
    for (std::size_t i = 0; i < curve.abscissas.size(); ++i) {
        os << format_number(curve.abscissas[i]) << ',' << format_number(curve.values[i]) << ','
           << to_string(curve.meaning) << '\n';
    }
}

inline nlohmann::json to_json(const HypothesisCheck& c)
{
    return {{"name", c.name}, {"passed", c.passed}, {"lhs", c.lhs}, {"rhs", c.rhs}};
}

inline nlohmann::json to_json(const BoundCurve& curve)
{
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < curve.abscissas.size(); ++i) {
        nlohmann::json p = {{"x", curve.abscissas[i]}, {"value", curve.values[i]}};
        if (i < curve.thresholds.size()) {
            p["threshold"] = curve.thresholds[i];
        }
        points.push_back(std::move(p));
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : curve.checks) {
        checks.push_back(to_json(c));
    }
    return {{"meaning", to_string(curve.meaning)},
            {"provenance", curve.provenance},
            {"checks", std::move(checks)},
            {"points", std::move(points)}};
}

inline nlohmann::json to_json(const VerificationReport& r)
{
    nlohmann::json method = {{"kind", to_string(r.method)}};
    if (r.method == Method::monte_carlo) {
        method["n"] = r.samples;
        method["seed"] = r.seed;
    }
    nlohmann::json j = {{"check_name", r.check_name}, {"passed", r.passed},       {"lhs", r.lhs},
                        {"rhs", r.rhs},               {"slack", r.slack},         {"method", std::move(method)},
                        {"tolerance", r.tolerance},   {"parameter", r.parameter}};
    if (r.ratio != 0.0) {
        j["R"] = r.ratio;
    }
    return j;
}

/// One JSON object per line.
inline void write_json_lines(std::ostream& os, const std::vector<VerificationReport>& reports)
{
    for (const auto& r : reports) {
        os << to_json(r).dump() << '\n';
    }
}

/// "atoms:v1:p1,v2:p2,..." for a law made only of atoms, readable by
/// parse_distribution.
inline std::string to_spec(const Distribution& d)
{
    const auto atoms = d.atoms();
    double total = 0.0;
    for (const auto& a : atoms) {
        total += a.probability;
    }
    if (atoms.empty() || std::abs(total - 1.0) > probability_tolerance) {
        throw std::invalid_argument("to_spec: only purely atomic laws have a spec string");
    }
    std::string out = "atoms:";
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (i != 0) {
            out += ',';
        }
        out += format_number(atoms[i].value) + ':' + format_number(atoms[i].probability);
    }
    return out;
}

}  // namespace convex_tail
