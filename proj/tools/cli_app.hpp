#pragma once

// convex-tail command line. run() is kept separate from main so the tests can
// drive it in-process.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "convex_tail.hpp"

namespace convex_tail::cli {

enum class Format { table, csv, json };

using Cell = std::variant<double, long long, bool, std::string>;

/// Column-oriented result; single-row tables render as key/value pairs.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

inline std::string cell_text(const Cell& c)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                return format_number(v);
            } else if constexpr (std::is_same_v<T, long long>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else {
                return v;
            }
        },
        c);
}

inline nlohmann::ordered_json cell_json(const Cell& c)
{
    return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

inline void render(std::ostream& out, const Table& t, Format f)
{
    if (f == Format::csv) {
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            out << (i ? "," : "") << t.columns[i];
        }
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << cell_text(row[i]);
            }
            out << '\n';
        }
        return;
    }
    if (f == Format::json) {
        // one object per row, one row per line
        for (const auto& row : t.rows) {
            nlohmann::ordered_json j;
            for (std::size_t i = 0; i < row.size(); ++i) {
                j[t.columns[i]] = cell_json(row[i]);
            }
            out << j.dump() << '\n';
        }
        return;
    }
    if (t.rows.size() == 1) {
        std::size_t w = 0;
        for (const auto& c : t.columns) {
            w = std::max(w, c.size());
        }
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            out << t.columns[i] << std::string(w - t.columns[i].size() + 2, ' ') << cell_text(t.rows[0][i]) << '\n';
        }
        return;
    }
    std::vector<std::size_t> widths(t.columns.size());
    std::vector<std::vector<std::string>> text;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        widths[i] = t.columns[i].size();
    }
    for (const auto& row : t.rows) {
        auto& r = text.emplace_back();
        for (std::size_t i = 0; i < row.size(); ++i) {
            r.push_back(cell_text(row[i]));
            widths[i] = std::max(widths[i], r.back().size());
        }
    }
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << cells[i];
            if (i + 1 < cells.size()) {
                out << std::string(widths[i] - cells[i].size() + 2, ' ');
            }
        }
        out << '\n';
    };
    line(t.columns);
    for (const auto& r : text) {
        line(r);
    }
}

inline void render_curve(std::ostream& out, const BoundCurve& curve, Format f)
{
    if (f == Format::csv) {
        write_csv(out, curve);
        return;
    }
    if (f == Format::json) {
        out << to_json(curve).dump() << '\n';
        return;
    }
    Table t{{"x", "value"}, {}};
    if (!curve.thresholds.empty()) {
        t.columns.push_back("threshold");
    }
    for (std::size_t i = 0; i < curve.abscissas.size(); ++i) {
        std::vector<Cell> row{curve.abscissas[i], curve.values[i]};
        if (!curve.thresholds.empty()) {
            row.push_back(curve.thresholds[i]);
        }
        t.rows.push_back(std::move(row));
    }
    render(out, t, f);
}

/// Command-line misuse that CLI11 cannot see (bad spec strings, bad values).
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Distribution dist_flag(const std::string& flag, const std::string& spec)
{
    try {
        return parse_distribution(spec);
    } catch (const spec_error& e) {
        throw usage_error(flag + ": " + e.what());
    }
}

inline double parse_r(const std::string& text)
{
    if (text == "inf" || text == "infinity" || text == "Inf") {
        return std::numeric_limits<double>::infinity();
    }
    double r = 0.0;
    if (!detail::try_parse_double(text, r)) {
        throw usage_error("--r: malformed number '" + text + "'");
    }
    return r;
}

/// Growth profiles for the transfer subcommand: const:C, max:C (max(t, C)),
/// linear:C (C t), power:K (t^K), gauss:P (exp(t^2 / 2P)).
inline std::function<double(double)> parse_q(const std::string& text)
{
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    double c = 1.0;
    if (colon != std::string::npos && !detail::try_parse_double(std::string_view(text).substr(colon + 1), c)) {
        throw usage_error("--q: malformed parameter in '" + text + "'");
    }
    if (kind == "const") {
        return [c](double) { return c; };
    }
    if (kind == "max") {
        return [c](double t) { return std::max(t, c); };
    }
    if (kind == "linear") {
        return [c](double t) { return c * t; };
    }
    if (kind == "power") {
        return [c](double t) { return std::pow(t, c); };
    }
    if (kind == "gauss") {
        return [c](double t) { return std::exp(t * t / (2.0 * c)); };
    }
    throw usage_error("--q: unknown profile '" + kind + "' (const, max, linear, power, gauss)");
}

inline std::uint64_t default_seed()
{
    const char* env = std::getenv("CONVEX_TAIL_SEED");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    std::uint64_t seed = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw usage_error("CONVEX_TAIL_SEED: not an unsigned integer: '" + std::string(s) + "'");
    }
    return seed;
}

inline std::vector<double> open_grid(int n)
{
    std::vector<double> xs;
    for (int i = 1; i <= n; ++i) {
        xs.push_back(static_cast<double>(i) / (n + 1));
    }
    return xs;
}

/// Cells of width (1 - tail)/cells below the atom of the extremal law, plus
/// the atom itself; the averages form a law below the extremal one.
inline Distribution discretize_extremal(const Distribution& ext, double tail, int cells)
{
    if (!ext.atoms().empty()) {
        double total = 0.0;
        for (const auto& a : ext.atoms()) {
            total += a.probability;
        }
        if (std::abs(total - 1.0) <= probability_tolerance) {
            return ext;
        }
    }
    std::vector<double> cuts;
    const double body = 1.0 - tail;
    for (int k = 1; k < cells; ++k) {
        cuts.push_back(body * k / cells);
    }
    cuts.push_back(body);
    return contract_on_cells(ext, cuts);
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Tail and quantile bounds under increasing convex domination", "convex-tail"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string format_name;
    std::uint64_t seed = 0;
    bool seed_given = false;
    app.add_option("--format", format_name, "table, csv or json")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->group("Output");
    app.add_option_function<std::uint64_t>(
           "--seed", [&](const std::uint64_t& v) { seed = v, seed_given = true; },
           "Monte Carlo seed (default: CONVEX_TAIL_SEED, else 1)")
        ->group("Output");

    std::string dist, x_dist, y_dist, q_spec, r_text, checks_text = "prop2,prop4,prop7";
    double s = 0, t = 0, x = 0, R = 0, p = 0, T = 1, gamma = 1, t_max = 5, ratio_R = 4;
    int grid = 100, cells = 256, reg_grid = 20, nmax = 20, t_points = 50;
    std::size_t samples = 1'000'000;
    std::vector<double> s_list, x_list, ratio_x;

    auto* bound = app.add_subcommand("bound", "sharp conditional tail bound P{X >= E(Y:Y>s)} <= P{Y>s}");
    bound->add_option("--dist", dist, "law of Y")->required();
    bound->add_option("--s", s, "threshold s")->required();

    auto* envelope = app.add_subcommand("envelope", "quantile envelope of every dominated X");
    envelope->add_option("--dist", dist, "law of Y")->required();
    envelope->add_option("--grid", grid, "number of levels i/(n+1)")->check(CLI::PositiveNumber);

    auto* extremal = app.add_subcommand("extremal", "law attaining the tail bound, as an atoms: spec");
    extremal->add_option("--dist", dist, "law of Y")->required();
    extremal->add_option("--s", s, "threshold s")->required();
    extremal->add_option("--cells", cells, "cells used to discretize the body below s")
        ->check(CLI::PositiveNumber);

    auto* hinge = app.add_subcommand("hinge", "optimal hinge function at t");
    hinge->add_option("--dist", dist, "non-atomic law of Y")->required();
    hinge->add_option("--t", t, "level t > E Y")->required();

    auto* transfer = app.add_subcommand("transfer", "transfer a Gaussian-type tail bound from Y to X");
    transfer->add_option("--p", p, "p > 1")->required();
    transfer->add_option("--T", T, "growth constant T >= 1")->required();
    transfer->add_option("--gamma", gamma, "gamma >= 1")->required();
    transfer->add_option("--q", q_spec, "growth profile Q: const:C, max:C, linear:C, power:K, gauss:P")
        ->required();
    transfer->add_option("--tmax", t_max, "largest t")->check(CLI::PositiveNumber);
    transfer->add_option("--points", t_points, "number of t values")->check(CLI::PositiveNumber);

    auto* ratio = app.add_subcommand("ratio", "tail-ratio bound P{X > t} <= R P{Y >= t}");
    ratio->add_option("--dist", dist, "law of Y")->required();
    ratio->add_option("--x", x, "level x in (0,1)")->required();
    ratio->add_option("--R", R, "ratio R > 1")->required();

    auto* kemperman = app.add_subcommand("kemperman", "Kemperman constant C(r)");
    kemperman->add_option("--r", r_text, "r > 1, or inf")->required();

    auto* regularity = app.add_subcommand("regularity", "estimate the regularity constant T for exponent p");
    regularity->add_option("--dist", dist, "law of Y")->required();
    regularity->add_option("--p", p, "p > 1")->required();
    regularity->add_option("--grid", reg_grid, "probe grid size")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "check the bounds on a pair (X, Y)");
    verify->add_option("--x-dist", x_dist, "law of X")->required();
    verify->add_option("--y-dist", y_dist, "law of Y")->required();
    verify->add_option("--checks", checks_text, "comma-separated subset of prop2,prop4,prop7");
    verify->add_option("--s", s_list, "thresholds for prop2 (default: deciles of Y)")->delimiter(',');
    verify->add_option("--x", x_list, "levels for prop4 (default: 0.1..0.9)")->delimiter(',');
    verify->add_option("--ratio-x", ratio_x, "levels for prop7 (default: 0.1,0.5,0.9)")->delimiter(',');
    verify->add_option("--R", ratio_R, "ratio for prop7");
    verify->add_option("--n", samples, "Monte Carlo sample size")->check(CLI::PositiveNumber);

    auto* counter = app.add_subcommand("counterexample", "quantile ratio of the blow-up counterexample");
    counter->add_option("--nmax", nmax, "number of cells")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto format_for = [&](Format fallback) {
        if (format_name.empty()) {
            return fallback;
        }
        return format_name == "csv" ? Format::csv : format_name == "json" ? Format::json : Format::table;
    };

    try {
        if (!seed_given) {
            seed = default_seed();
        }
        if (*bound) {
            const auto b = sharp_tail_bound(dist_flag("--dist", dist), s);
            render(out, {{"threshold", "bound", "s", "degenerate"}, {{b.threshold, b.bound, b.s, b.degenerate}}},
                   format_for(Format::table));
        } else if (*envelope) {
            render_curve(out, quantile_envelope(dist_flag("--dist", dist), open_grid(grid)), format_for(Format::csv));
        } else if (*extremal) {
            const auto y = dist_flag("--dist", dist);
            const auto te = tail_expectation(y, s, false);
            const auto law = discretize_extremal(extremal_construction(y, s), te.tail_prob, cells);
            const Format f = format_for(Format::table);
            if (f == Format::table) {
                out << to_spec(law) << '\n';
            } else {
                render(out, {{"spec", "atom", "tail_mass"}, {{to_spec(law), te.value, te.tail_prob}}}, f);
            }
        } else if (*hinge) {
            const auto h = optimal_hinge(dist_flag("--dist", dist), t);
            render(out,
                   {{"t", "slope", "kink", "objective", "tail_at_kink"},
                    {{h.hinge.t, h.hinge.a, h.kink, h.objective, h.tail_at_kink}}},
                   format_for(Format::table));
        } else if (*transfer) {
            std::vector<double> ts;
            for (int i = 1; i <= t_points; ++i) {
                ts.push_back(t_max * i / t_points);
            }
            render_curve(out, gaussian_transfer(parse_q(q_spec), p, T, gamma, ts), format_for(Format::csv));
        } else if (*ratio) {
            const auto b = tail_ratio_bound(dist_flag("--dist", dist), x, R);
            render(out, {{"t", "bound", "hypothesis_lhs", "x", "R"}, {{b.t, b.bound, b.hypothesis_lhs, x, R}}},
                   format_for(Format::table));
        } else if (*kemperman) {
            const double c = kemperman_constant(parse_r(r_text));
            const Format f = format_for(Format::table);
            if (f == Format::table) {
                out << format_number(c) << '\n';
            } else {
                render(out, {{"r", "constant"}, {{r_text, c}}}, f);
            }
        } else if (*regularity) {
            const auto rep = check_regularity(dist_flag("--dist", dist), p, reg_grid);
            auto opt = [](const std::optional<bool>& b) -> Cell {
                return b ? Cell{*b ? "true" : "false"} : Cell{std::string("n/a")};
            };
            render(out,
                   {{"p", "T", "regular", "T_coarse", "T_refined", "log_derivative_condition",
                     "derivative_scaling_condition"},
                    {{rep.p, rep.T, rep.regular, rep.T_coarse, rep.T_refined, opt(rep.log_derivative_condition),
                      opt(rep.derivative_scaling_condition)}}},
                   format_for(Format::table));
            if (!rep.regular) {
                err << "not regular: T grows from " << format_number(rep.T_coarse) << " to "
                    << format_number(rep.T_refined) << " under grid refinement\n";
                return 1;
            }
        } else if (*verify) {
            std::vector<Check> checks;
            for (auto name : detail::split(checks_text, ',')) {
                name = detail::trim(name);
                if (name == "prop2") {
                    checks.push_back(Check::prop2);
                } else if (name == "prop4") {
                    checks.push_back(Check::prop4);
                } else if (name == "prop7") {
                    checks.push_back(Check::prop7);
                } else {
                    throw usage_error("--checks: unknown check '" + std::string(name) + "'");
                }
            }
            VerifyParams params;
            params.thresholds = s_list;
            params.levels = x_list;
            for (double level : ratio_x) {
                params.ratio_points.push_back({level, ratio_R});
            }
            if (ratio_x.empty() && verify->count("--R") > 0) {
                params.ratio_points = {{0.1, ratio_R}, {0.5, ratio_R}, {0.9, ratio_R}};
            }
            params.mc_samples = samples;
            const auto reports =
                verify_bound(dist_flag("--x-dist", x_dist), dist_flag("--y-dist", y_dist), checks, params, seed);
            const Format f = format_for(Format::table);
            if (f == Format::json) {
                write_json_lines(out, reports);
            } else {
                Table table{{"check", "method", "parameter", "R", "lhs", "rhs", "slack", "tolerance", "passed"}, {}};
                for (const auto& r : reports) {
                    table.rows.push_back({r.check_name, std::string(to_string(r.method)), r.parameter, r.ratio, r.lhs,
                                          r.rhs, r.slack, r.tolerance, r.passed});
                }
                render(out, table, f);
            }
            bool all = true;
            for (const auto& r : reports) {
                all = all && r.passed;
                if (!r.passed) {
                    err << "violated: " << r.check_name << " (" << to_string(r.method) << ") at "
                        << format_number(r.parameter) << ": lhs = " << format_number(r.lhs)
                        << " > rhs = " << format_number(r.rhs) << " + " << format_number(r.tolerance) << '\n';
                }
            }
            return all ? 0 : 1;
        } else if (*counter) {
            const auto c = counterexample(nmax);
            Table table{{"n", "log_one_minus_x", "log_mass", "log_cell_mean", "ratio"}, {}};
            for (int n = 0; n < nmax; ++n) {
                table.rows.push_back({static_cast<long long>(n + 1), c.log_probe_tail[n], c.log_masses[n],
                                      c.log_cell_means[n], c.ratio_curve[n]});
            }
            render(out, table, format_for(Format::csv));
        }
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const hypothesis_error& e) {
        err << "hypothesis failed: " << e.what() << "\n  lhs = " << format_number(e.lhs())
            << "\n  rhs = " << format_number(e.rhs()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        // preconditions, empty tails, numerical failures
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace convex_tail::cli
