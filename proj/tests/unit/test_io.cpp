#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "coxflux/io.hpp"
#include "coxflux/queue_maps.hpp"

using namespace coxflux;

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)); }

MarkedPointSet sample_points(std::uint64_t seed) {
    Rng rng(seed);
    return sample_stationary(IntensityModel::finite_mixture({1.0, 3.0}, {0.5, 0.5}), 4, {0, 2},
                             ServiceDistribution::hyperexponential({0.3, 0.7}, {0.5, 3.0}), 1e-6, rng);
}

}  // namespace

TEST_CASE("number formatting") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(-2.5) == "-2.5");
    CHECK(format_number(1.0 / 3) == "0.333333333333");
    CHECK(format_number(123456.789) == "123456.789");
    CHECK(std::stod(format_number(1.234567890123e-7)) == doctest::Approx(1.234567890123e-7).epsilon(1e-11));
}

TEST_CASE("interval measure round trip") {
    const auto m = IntervalMeasure::from_density(-1, 2, [](double t) { return 1 + t * t; }, 37);
    std::stringstream ss;
    write_csv(ss, m);
    CHECK(ss.str().rfind("edge_lo,edge_hi,mass\n", 0) == 0);
    const auto back = read_interval_measure_csv(ss);
    REQUIRE(back.bins() == m.bins());
    for (std::size_t i = 0; i < m.bins(); ++i) {
        CHECK(close(back.masses()[i], m.masses()[i]));
        CHECK(close(back.edges()[i], m.edges()[i]));
    }
    CHECK(close(back.hi(), m.hi()));
}

TEST_CASE("point set and departure round trips") {
    const auto pts = sample_points(1);
    REQUIRE(pts.size() > 0);
    std::stringstream ss;
    write_csv(ss, pts);
    const auto back = read_points_csv(ss);
    REQUIRE(back.size() == pts.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(close(back[i].s, pts.points[i].s));
        CHECK(close(back[i].x, pts.points[i].x));
    }

    const auto dep = departures(pts, {0, 2});
    std::stringstream ds;
    write_csv(ds, dep);
    const auto dback = read_counting_measure_csv(ds);
    REQUIRE(dback.atoms().size() == dep.atoms().size());
    for (std::size_t i = 0; i < dep.atoms().size(); ++i) {
        CHECK(close(dback.atoms()[i].t, dep.atoms()[i].t));
        CHECK(dback.atoms()[i].weight == dep.atoms()[i].weight);
    }
}

TEST_CASE("occupancy path round trip") {
    const auto pts = sample_points(2);
    const auto path = occupancy_path(pts, {0, 2});
    std::stringstream ss;
    write_csv(ss, path);
    const auto back = read_occupancy_csv(ss);
    CHECK(close(back.a(), path.a()));
    CHECK(close(back.b(), path.b()));
    REQUIRE(back.segments() == path.segments());
    for (std::size_t i = 0; i < path.segments(); ++i) {
        CHECK(back.levels()[i] == path.levels()[i]);
        CHECK(close(back.breakpoints()[i], path.breakpoints()[i]));
    }
    CHECK(close(back.integral(), path.integral()));
}

TEST_CASE("decay csv layout") {
    DecayEstimate est;
    est.points.push_back({10, 1000, 12, 0.012, 0.006, 0.02, 0.003, true});
    std::stringstream ss;
    write_csv(ss, est);
    CHECK(ss.str() == "n,samples,hits,p_hat,ci_lo,ci_hi\n10,1000,12,0.012,0.006,0.02\n");
}

TEST_CASE("malformed csv reports the line") {
    std::stringstream bad("s,x\n0.1,0.2\n0.3\n");
    CHECK_THROWS_WITH_AS(read_points_csv(bad), doctest::Contains("line 3"), std::runtime_error);
    std::stringstream header("a,b\n");
    CHECK_THROWS_AS(read_points_csv(header), std::runtime_error);
}

TEST_CASE("sidecar and config hash") {
    const auto pts = sample_points(3);
    const auto side = point_sidecar(pts, 42);
    CHECK(side.at("seed") == 42);
    CHECK(side.at("leak_bound").get<double>() == pts.leak_bound);
    CHECK(side.at("window")[0] == 0.0);
    CHECK(side.at("points") == pts.size());

    const auto a = nlohmann::json::parse(R"({"seed": 1, "n": 5})");
    const auto b = nlohmann::json::parse(R"({"n": 5, "seed": 1})");
    const auto c = nlohmann::json::parse(R"({"n": 6, "seed": 1})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("write_text_file creates directories") {
    const char* env = std::getenv("COXFLUX_TEST_TMP");
    const auto root = std::filesystem::path(env ? env : std::filesystem::temp_directory_path().string()) / "io_test";
    std::filesystem::remove_all(root);
    write_text_file(root / "a" / "b" / "c.txt", "hello\n");
    std::ifstream in(root / "a" / "b" / "c.txt");
    std::string line;
    std::getline(in, line);
    CHECK(line == "hello");
    std::filesystem::remove_all(root);
}
