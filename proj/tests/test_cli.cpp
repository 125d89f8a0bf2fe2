#include <array>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "catch2/catch_amalgamated.hpp"

#include "cli_app.hpp"

using namespace convex_tail;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        rows.push_back({});
        for (auto cell : detail::split(line, ',')) {
            rows.back().emplace_back(cell);
        }
    }
    return rows;
}

// exit status of the installed binary
int run_binary(const std::string& args)
{
    const std::string cmd = std::string(CONVEX_TAIL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("kemperman prints the constant")
{
    const auto r = run_cli({"kemperman", "--r", "2"});
    CHECK(r.code == 0);
    CHECK(r.out == "4\n");
    CHECK(run_cli({"kemperman", "--r", "inf"}).out == "2.7182818284590451\n");
    const auto bad = run_cli({"kemperman", "--r", "1"});
    CHECK(bad.code == 1);
    CHECK_THAT(bad.err, ContainsSubstring("r must exceed 1"));
}

TEST_CASE("bound as JSON")
{
    const auto r = run_cli({"bound", "--dist", "exp:1", "--s", "1", "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("{\"threshold\":2.0,\"bound\":0.367879"));
    const auto j = nlohmann::json::parse(r.out);
    CHECK_THAT(j["threshold"].get<double>(), WithinAbs(2.0, 1e-12));
    CHECK_THAT(j["bound"].get<double>(), WithinAbs(std::exp(-1.0), 1e-15));
    CHECK(j["degenerate"] == false);

    const auto deg = run_cli({"bound", "--dist", "uniform:0,1", "--s", "1", "--format", "csv"});
    CHECK(deg.out == "threshold,bound,s,degenerate\n1,0,1,true\n");
}

TEST_CASE("counterexample CSV")
{
    const auto r = run_cli({"counterexample", "--nmax", "20", "--format", "csv"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 21);
    CHECK(rows[0].back() == "ratio");
    double max_ratio = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double v = std::stod(rows[i].back());
        max_ratio = std::max(max_ratio, v);
        if (i > 10) {
            CHECK(v > std::stod(rows[i - 1].back()));
        }
    }
    CHECK(max_ratio > 10.0);
    CHECK(run_cli({"counterexample", "--nmax", "1"}).code == 1);
}

TEST_CASE("extremal output re-ingests as a dominated law")
{
    for (const auto& [spec, s] : std::vector<std::pair<std::string, std::string>>{
             {"exp:1", "1"}, {"pareto:3,1", "2"}, {"normal:0,1", "0.5"}, {"uniform:0,1", "0.5"},
             {"lognormal:0,1", "1"}, {"atoms:0:0.25,1:0.25,3:0.5", "1"}}) {
        const auto r = run_cli({"extremal", "--dist", spec, "--s", s});
        INFO(spec << " -> " << r.out << r.err);
        REQUIRE(r.code == 0);
        const auto x = parse_distribution(detail::trim(r.out));
        const auto y = parse_distribution(spec);
        CHECK(icx_dominates(x, y).dominated);
        const auto te = tail_expectation(y, std::stod(s), false);
        CHECK_THAT(x.survival_inclusive(te.value), WithinAbs(te.tail_prob, 1e-12));
    }
    const auto j = run_cli({"extremal", "--dist", "exp:1", "--s", "1", "--format", "json"});
    const auto doc = nlohmann::json::parse(j.out);
    CHECK_THAT(doc["atom"].get<double>(), WithinAbs(2.0, 1e-10));
    CHECK(run_cli({"extremal", "--dist", "uniform:0,1", "--s", "2"}).code == 1);
}

TEST_CASE("curves as CSV and JSON")
{
    const auto env = run_cli({"envelope", "--dist", "uniform:0,1", "--grid", "3"});
    CHECK(env.out ==
          "x,value,meaning\n0.25,0.625,quantile_envelope\n0.5,0.75,quantile_envelope\n0.75,0.875,quantile_envelope\n");

    const auto tr = run_cli({"transfer", "--p", "2", "--T", "1", "--gamma", "1", "--q", "const:1", "--tmax", "2",
                             "--points", "2", "--format", "json"});
    REQUIRE(tr.code == 0);
    const auto doc = nlohmann::json::parse(tr.out);
    CHECK(doc["provenance"] == "gaussian_transfer");
    CHECK(doc["meaning"] == "tail_bound");
    CHECK(doc["checks"][0]["passed"] == true);
    CHECK_THAT(doc["points"][1]["threshold"].get<double>(), WithinAbs(2.0, 1e-15));
    CHECK_THAT(doc["points"][1]["value"].get<double>(), WithinAbs(std::exp(-2.0), 1e-15));
}

TEST_CASE("hypothesis failures exit 1 and print both sides")
{
    const auto r = run_cli({"ratio", "--dist", "uniform:0,1", "--x", "0.5", "--R", "1.5"});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK_THAT(r.err, ContainsSubstring("lhs = 0.66666666666666"));
    CHECK_THAT(r.err, ContainsSubstring("rhs = 0.75"));

    const auto t = run_cli({"transfer", "--p", "2", "--T", "1", "--gamma", "1", "--q", "linear:1"});
    CHECK(t.code == 1);
    CHECK_THAT(t.err, ContainsSubstring("needs T >="));

    const auto reg = run_cli({"regularity", "--dist", "pareto:2,1", "--p", "4"});
    CHECK(reg.code == 1);
    CHECK_THAT(reg.out, ContainsSubstring("false"));

    CHECK(run_cli({"hinge", "--dist", "exp:1", "--t", "0.5"}).code == 1);
}

TEST_CASE("successful computations")
{
    const auto h = run_cli({"hinge", "--dist", "exp:1", "--t", "2", "--format", "json"});
    REQUIRE(h.code == 0);
    const auto j = nlohmann::json::parse(h.out);
    CHECK_THAT(j["kink"].get<double>(), WithinAbs(1.0, 1e-9));
    CHECK_THAT(j["objective"].get<double>(), WithinAbs(std::exp(-1.0), 1e-9));

    const auto r = run_cli({"ratio", "--dist", "pareto:2,1", "--x", "0.25", "--R", "4", "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK_THAT(nlohmann::json::parse(r.out)["bound"].get<double>(), WithinAbs(0.25, 1e-9));

    const auto reg = run_cli({"regularity", "--dist", "pareto:2,1", "--p", "2", "--format", "json"});
    REQUIRE(reg.code == 0);
    CHECK(nlohmann::json::parse(reg.out)["T"].get<double>() <= 1.0 + 1e-6);
}

TEST_CASE("usage errors exit 2 and name the flag")
{
    const auto unknown = run_cli({"bound", "--dist", "exp:1", "--s", "1", "--bogus", "3"});
    CHECK(unknown.code == 2);
    CHECK_THAT(unknown.err, ContainsSubstring("--bogus"));

    const auto spec = run_cli({"bound", "--dist", "exp:one", "--s", "1"});
    CHECK(spec.code == 2);
    CHECK_THAT(spec.err, ContainsSubstring("--dist"));

    const auto xspec = run_cli({"verify", "--x-dist", "nope:1", "--y-dist", "exp:1"});
    CHECK(xspec.code == 2);
    CHECK_THAT(xspec.err, ContainsSubstring("--x-dist"));

    CHECK(run_cli({"bound", "--dist", "exp:1"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"bound", "--dist", "exp:1", "--s", "1", "--format", "xml"}).code == 2);
    CHECK(run_cli({"verify", "--x-dist", "exp:1", "--y-dist", "exp:1", "--checks", "prop9"}).code == 2);
    CHECK(run_cli({"transfer", "--p", "2", "--T", "1", "--gamma", "1", "--q", "wavy:1"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("verify output is reproducible and follows the seed")
{
    const std::vector<std::string> args = {"verify", "--x-dist", "exp:1", "--y-dist", "pareto:3,1",
                                           "--n", "20000", "--checks", "prop2"};
    auto with_seed = args;
    with_seed.insert(with_seed.end(), {"--seed", "7"});
    const auto a = run_cli(with_seed);
    const auto b = run_cli(with_seed);
    CHECK(a.out == b.out);

    ::setenv("CONVEX_TAIL_SEED", "7", 1);
    const auto env = run_cli(args);
    ::setenv("CONVEX_TAIL_SEED", "8", 1);
    const auto other = run_cli(args);
    ::unsetenv("CONVEX_TAIL_SEED");
    CHECK(env.out == a.out);
    CHECK(other.out != a.out);

    const auto lines = run_cli({"verify", "--x-dist", "exp:1", "--y-dist", "exp:1", "--n", "1000", "--format",
                                "json", "--checks", "prop4", "--x", "0.5"});
    std::istringstream in(lines.out);
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("check_name"));
        CHECK(j.contains("slack"));
        ++count;
    }
    CHECK(count == 3);
}

TEST_CASE("verify exits 1 when the pair is not ordered")
{
    const auto r = run_cli({"verify", "--x-dist", "atoms:1.5:1", "--y-dist", "uniform:0,1", "--n", "1000"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("violated: icx_order"));
}

TEST_CASE("installed binary exit codes")
{
    CHECK(run_binary("kemperman --r 2") == 0);
    CHECK(run_binary("kemperman --r 2 --nope") == 2);
    CHECK(run_binary("ratio --dist uniform:0,1 --x 0.5 --R 1.5") == 1);
}
