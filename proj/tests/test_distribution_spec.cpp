#include <cmath>
#include <filesystem>
#include <fstream>

#include "catch2/catch_amalgamated.hpp"

#include "convex_tail/distribution_spec.hpp"
#include "convex_tail/serialize.hpp"

using namespace convex_tail;
using Catch::Matchers::WithinAbs;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body)
{
    const auto dir = std::filesystem::temp_directory_path() / "convex_tail_spec_test";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << body;
    return p;
}

}  // namespace

TEST_CASE("parametric specs")
{
    CHECK(parse_distribution("normal:0,1").kind() == Kind::normal);
    CHECK_THAT(parse_distribution("exp:2").mean(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(parse_distribution("uniform:0,1").quantile(0.25), WithinAbs(0.25, 1e-15));
    CHECK_THAT(parse_distribution("pareto:2,1").survival(2.0), WithinAbs(0.25, 1e-15));
    CHECK(parse_distribution("lognormal:0,1").kind() == Kind::lognormal);
    CHECK_THAT(parse_distribution(" exp : 1 ").mean(), WithinAbs(1.0, 1e-15));
}

TEST_CASE("atom specs")
{
    const auto d = parse_distribution("atoms:0:0.5,1:0.25,2:0.25");
    REQUIRE(d.atoms().size() == 3);
    CHECK_THAT(d.mean(), WithinAbs(0.75, 1e-15));
    CHECK(parse_distribution("atoms:-1.5:1").atoms()[0].value == -1.5);
}

TEST_CASE("file specs")
{
    const auto e = write_temp("sample.csv", "value\n3\n1\n2\n# note\n\n2\n");
    const auto d = parse_distribution("empirical:@" + e.string());
    CHECK(d.kind() == Kind::empirical);
    CHECK_THAT(d.mean(), WithinAbs(2.0, 1e-15));

    const auto g = write_temp("grid.csv", "x,H\n0.1,0\n0.5,1\n0.9,3\n");
    const auto h = parse_distribution("grid:@grid.csv", g.parent_path());
    CHECK(h.kind() == Kind::quantile_grid);
    CHECK_THAT(h.quantile(0.5), WithinAbs(1.0, 1e-12));

    const auto bad = write_temp("bad.csv", "1\n2\nthree\n");
    CHECK_THROWS_AS(parse_distribution("empirical:@" + bad.string()), spec_error);
    CHECK_THROWS_AS(parse_distribution("empirical:@/nonexistent/file.csv"), spec_error);
    CHECK_THROWS_AS(parse_distribution("grid:" + g.string()), spec_error);
}

TEST_CASE("malformed specs are spec errors")
{
    for (const char* s : {"exp", "exp:", "exp:abc", "exp:1,2", "normal:0", "normal:0,-1", "uniform:1,0",
                          "pareto:1,1", "atoms:1:0.5", "atoms:1", "weibull:1,2", "exp:1x"}) {
        INFO(s);
        CHECK_THROWS_AS(parse_distribution(s), spec_error);
    }
}

TEST_CASE("atomic laws round-trip through their spec string")
{
    const auto d = Distribution::atomic_mixture({{0.1, 0.3}, {1.0 / 3.0, 0.2}, {7.25, 0.5}});
    const auto spec = to_spec(d);
    const auto back = parse_distribution(spec);
    REQUIRE(back.atoms().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.atoms()[i].value == d.atoms()[i].value);
        CHECK(back.atoms()[i].probability == d.atoms()[i].probability);
    }
    CHECK_THROWS_AS(to_spec(Distribution::exponential(1.0)), std::invalid_argument);
}
