#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "fadetwin/raytwin.hpp"

using namespace fadetwin;

namespace {

constexpr double kPi = 3.14159265358979323846;

Scene free_space(Vec2 tx) {
    Scene s;
    s.rx = {0.0, 0.0};
    s.tx_positions = {tx};
    s.band = {2e9, 10e9, 8001};
    return s;
}

Scene single_wall_scene() {
    // Long wall along y = -5, tx and rx above it.
    Scene s;
    s.materials = {{"brick", kBrickEpsR}};
    s.walls = {{{-1000.0, -5.0}, {1000.0, -5.0}, 0}};
    s.rx = {50.0, 10.0};
    s.tx_positions = {{0.0, 10.0}};
    s.band = {2e9, 10e9, 8001};
    return s;
}

}  // namespace

TEST_CASE("free-space LOS: Friis amplitude and delay") {
    Scene s = free_space({300.0, 0.0});
    PathSet ps = trace(s, s.tx_positions[0], 2);
    REQUIRE(ps.paths.size() == 1);
    double lambda_c = kSpeedOfLight / 6e9;
    CHECK(std::abs(ps.paths[0].amplitude) == doctest::Approx(lambda_c / (4.0 * kPi * 300.0)).epsilon(1e-12));
    CHECK(std::abs(ps.paths[0].amplitude) == doctest::Approx(1.3254e-5).epsilon(1e-4));
    CHECK(ps.paths[0].delay == doctest::Approx(300.0 / kSpeedOfLight).epsilon(1e-12));
    CHECK(ps.paths[0].delay == doctest::Approx(1.0007e-6).epsilon(1e-4));
    CHECK(ps.paths[0].order == 0);
    CHECK(norm(ps.paths[0].departure_dir) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Fresnel coefficient at normal incidence, brick") {
    double oracle = (1.0 - std::sqrt(3.91)) / (1.0 + std::sqrt(3.91));
    CHECK(fresnel_reflection(1.0, 3.91) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(fresnel_reflection(1.0, 3.91) == doctest::Approx(-0.32828).epsilon(1e-4));
    // Grazing incidence: |Gamma| -> 1.
    CHECK(fresnel_reflection(1e-9, 3.91) == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("single wall: LOS plus mirror path") {
    Scene s = single_wall_scene();
    PathSet ps = trace(s, s.tx_positions[0], 1);
    REQUIRE(ps.paths.size() == 2);
    CHECK(ps.paths[0].order == 0);
    CHECK(ps.paths[1].order == 1);
    Vec2 image = mirror_point(s.tx_positions[0], s.walls[0].a, s.walls[0].b);
    CHECK(image.y == doctest::Approx(-20.0).epsilon(1e-12));
    double mirror_len = dist(image, s.rx);
    CHECK(ps.paths[1].delay * kSpeedOfLight == doctest::Approx(mirror_len).epsilon(1e-9));
}

TEST_CASE("max_order=0 yields LOS only; blocked LOS drops the path") {
    Scene s = single_wall_scene();
    CHECK(trace(s, s.tx_positions[0], 0).paths.size() == 1);

    // Wall between tx and rx blocks everything at order 0.
    Scene blocked;
    blocked.materials = {{"brick", kBrickEpsR}};
    blocked.walls = {{{25.0, -50.0}, {25.0, 50.0}, 0}};
    blocked.rx = {0.0, 0.0};
    blocked.tx_positions = {{50.0, 0.0}};
    blocked.band = {2e9, 10e9, 8001};
    CHECK(trace(blocked, blocked.tx_positions[0], 0).paths.empty());
}

TEST_CASE("trace rejects bad max_order") {
    Scene s = free_space({10.0, 0.0});
    CHECK_THROWS_AS(trace(s, s.tx_positions[0], 4), SceneError);
    CHECK_THROWS_AS(trace(s, s.tx_positions[0], -1), SceneError);
}

TEST_CASE("transfer function: phase identities") {
    PathSet ps;
    ps.paths.push_back({{1.0, 0.0}, 1e-6, {1.0, 0.0}, 0});
    std::vector<double> f{1e6};
    auto h = transfer_function(ps, f);
    CHECK(h[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h[0].imag() == doctest::Approx(0.0).epsilon(1e-12));

    ps.paths.push_back({{1.0, 0.0}, 0.5e-6, {1.0, 0.0}, 0});
    ps.paths[0].delay = 1e-12;  // effectively zero
    h = transfer_function(ps, f);
    CHECK(std::abs(h[0]) < 1e-5);  // 1 + e^{-i pi} ~ 0
}

TEST_CASE("transfer function matches naive summation oracle") {
    PathSet ps;
    ps.paths.push_back({{0.3, -0.1}, 1.1e-7, {1.0, 0.0}, 0});
    ps.paths.push_back({{-0.2, 0.05}, 3.7e-7, {0.0, 1.0}, 1});
    ps.paths.push_back({{0.01, 0.9}, 9.2e-7, {0.0, -1.0}, 2});
    std::vector<double> freqs{0.0, 1e6, 3.3e8, 7.7e9};
    auto h = transfer_function(ps, freqs);
    for (size_t i = 0; i < freqs.size(); ++i) {
        std::complex<double> oracle{0.0, 0.0};
        for (const auto& p : ps.paths)
            oracle += p.amplitude * std::exp(std::complex<double>(0.0, -2.0 * kPi * freqs[i] * p.delay));
        CHECK(std::abs(h[i] - oracle) <= 1e-12 * std::abs(oracle));
    }
    // At f = 0 the sum is exactly the amplitude total.
    std::complex<double> amp_sum{0.0, 0.0};
    for (const auto& p : ps.paths) amp_sum += p.amplitude;
    CHECK(h[0] == amp_sum);
}

TEST_CASE("transfer function of empty path set is all zeros") {
    PathSet ps;
    std::vector<double> freqs{0.0, 1e9};
    for (auto v : transfer_function(ps, freqs)) CHECK(v == std::complex<double>{0.0, 0.0});
}

TEST_CASE("power_samples: free space is flat, 8001 samples") {
    Scene s = free_space({120.0, 0.0});
    auto p = power_samples(s, s.tx_positions[0], 2);
    REQUIRE(p.size() == 8001);
    double lambda_c = kSpeedOfLight / 6e9;
    double expected = std::pow(lambda_c / (4.0 * kPi * 120.0), 2.0);
    for (size_t i = 0; i < p.size(); i += 500) CHECK(p[i] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("local_grid_power: count and degenerate grid") {
    Scene s = single_wall_scene();
    auto grid = local_grid_power(s, s.tx_positions[0], 400, -1.0, 1);
    CHECK(grid.size() == 400);

    auto one = local_grid_power(s, s.tx_positions[0], 1, -1.0, 1);
    auto full = power_samples(s, s.tx_positions[0], 1);
    CHECK(one.size() == 1);
    CHECK(one[0] == doctest::Approx(full[4000]).epsilon(1e-12));  // band-center bin

    CHECK_THROWS_AS(local_grid_power(s, s.tx_positions[0], 300, -1.0, 1), SceneError);
}

TEST_CASE("local_grid_power: free-space variation under 0.1 dB") {
    Scene s = free_space({200.0, 0.0});
    auto grid = local_grid_power(s, s.tx_positions[0], 400, -1.0, 2);
    double lo = *std::min_element(grid.begin(), grid.end());
    double hi = *std::max_element(grid.begin(), grid.end());
    CHECK(10.0 * std::log10(hi / lo) < 0.1);
}

TEST_CASE("reciprocity: swapping tx and rx preserves (|amp|, delay)") {
    Scene s = synthetic_campus(4);
    for (int id : {0, 40, 90}) {
        Vec2 tx = s.tx_positions[static_cast<size_t>(id)];
        PathSet fwd = trace(s, tx, 2);

        Scene swapped = s;
        swapped.rx = tx;
        PathSet rev = trace(swapped, s.rx, 2);

        REQUIRE(fwd.paths.size() == rev.paths.size());
        for (size_t i = 0; i < fwd.paths.size(); ++i) {
            CHECK(fwd.paths[i].delay == doctest::Approx(rev.paths[i].delay).epsilon(1e-10));
            CHECK(std::abs(fwd.paths[i].amplitude) ==
                  doctest::Approx(std::abs(rev.paths[i].amplitude)).epsilon(1e-10));
        }
    }
}

TEST_CASE("paths sorted by delay with consistent lengths") {
    Scene s = synthetic_campus(0);
    PathSet ps = trace(s, s.tx_positions[10], 2);
    for (size_t i = 1; i < ps.paths.size(); ++i) CHECK(ps.paths[i].delay >= ps.paths[i - 1].delay);
    for (const auto& p : ps.paths) {
        CHECK(p.delay > 0.0);
        CHECK(norm(p.departure_dir) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("monotone energy: reflected amplitude grows with eps_r") {
    Scene s = single_wall_scene();
    double prev = 0.0;
    for (double eps : {2.0, 3.91, 8.0, 1e8}) {
        s.materials[0].eps_r = eps;
        PathSet ps = trace(s, s.tx_positions[0], 1);
        REQUIRE(ps.paths.size() == 2);
        double refl = std::abs(ps.paths[1].amplitude);
        CHECK(refl > prev);
        prev = refl;
    }
    // eps_r -> infinity surrogate: bounce preserves amplitude up to spreading.
    PathSet ps = trace(s, s.tx_positions[0], 1);
    double lambda_c = kSpeedOfLight / 6e9;
    double spread = lambda_c / (4.0 * kPi * ps.paths[1].delay * kSpeedOfLight);
    CHECK(std::abs(ps.paths[1].amplitude) == doctest::Approx(spread).epsilon(1e-3));
}
