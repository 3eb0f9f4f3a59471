#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "fadetwin/gpredict.hpp"
#include "fadetwin/rng.hpp"

using namespace fadetwin;

namespace {

// Dense-solve posterior oracle, independent of the GpModel code path:
// plain Gaussian elimination on (K + noise I).
PredictiveDistribution dense_oracle(const KernelParams& params, const std::vector<FeatureVector>& x,
                                    const std::vector<double>& y, const FeatureVector& query) {
    const size_t n = x.size();
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= static_cast<double>(n);

    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) a[i][j] = kernel(params, x[i], x[j]) + (i == j ? params.noise_var : 0.0);
        a[i][n] = y[i] - mean_y;
    }
    // Solve A alpha = y_centered by partial-pivot elimination.
    std::vector<std::vector<double>> m = a;
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double factor = m[r][col] / m[col][col];
            for (size_t c = col; c <= n; ++c) m[r][c] -= factor * m[col][c];
        }
    }
    std::vector<double> alpha(n);
    for (size_t i = 0; i < n; ++i) alpha[i] = m[i][n] / m[i][i];

    std::vector<double> ks(n);
    for (size_t i = 0; i < n; ++i) ks[i] = kernel(params, x[i], query);
    double mean = mean_y;
    for (size_t i = 0; i < n; ++i) mean += ks[i] * alpha[i];

    // Variance: k** - k*^T (K + noise I)^{-1} k*, second elimination pass.
    m = a;
    for (size_t i = 0; i < n; ++i) m[i][n] = ks[i];
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double factor = m[r][col] / m[col][col];
            for (size_t c = col; c <= n; ++c) m[r][c] -= factor * m[col][c];
        }
    }
    double quad = 0.0;
    for (size_t i = 0; i < n; ++i) quad += ks[i] * (m[i][n] / m[i][i]);
    return {mean, params.signal_var - quad};
}

EmpiricalCdf exp_unit_cdf(size_t n = 100000) {
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = -std::log(1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    return EmpiricalCdf(v);
}

}  // namespace

TEST_CASE("build_features: spatial and dt shapes") {
    auto f = build_features(FeatureMode::spatial, {3.0, -4.0}, nullptr);
    CHECK(f == FeatureVector{3.0, -4.0});

    EmpiricalCdf constant({0.001, 0.001, 0.001});
    auto g = build_features(FeatureMode::dt, {1.0, 2.0}, &constant);
    REQUIRE(g.size() == 102);
    for (size_t j = 2; j < g.size(); ++j) CHECK(g[j] == doctest::Approx(g[2]).epsilon(1e-12));
    CHECK(g[2] == doctest::Approx(10.0 * std::log10(0.001)).epsilon(1e-12));

    CHECK_THROWS_AS(build_features(FeatureMode::dt, {0.0, 0.0}, nullptr), GpError);
    EmpiricalCdf blocked({0.0, 0.0, 0.0});
    CHECK_THROWS_AS(build_features(FeatureMode::dt, {0.0, 0.0}, &blocked), GpError);
}

TEST_CASE("build_features: exponential quantile oracle, non-decreasing CDF block") {
    EmpiricalCdf cdf = exp_unit_cdf();
    auto f = build_features(FeatureMode::dt, {0.0, 0.0}, &cdf);
    for (int j = 0; j < kCdfFeatureCount; ++j) {
        double u = (j + 0.5) / kCdfFeatureCount;
        double oracle = 10.0 * std::log10(-std::log(1.0 - u));
        CHECK(f[static_cast<size_t>(j) + 2] == doctest::Approx(oracle).epsilon(2e-3));
    }
    for (size_t j = 3; j < f.size(); ++j) CHECK(f[j] >= f[j - 1]);
}

TEST_CASE("kernel: symmetry, diagonal, closed form") {
    KernelParams p{2.0, {1.0, 1.0}, 0.0};
    FeatureVector a{0.0, 0.0}, b{1.0, 0.0};
    CHECK(kernel(p, a, a) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(kernel(p, a, b) == kernel(p, b, a));
    CHECK(kernel(p, a, b) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));
    CHECK(kernel(p, a, b) == doctest::Approx(1.21306).epsilon(1e-5));
    CHECK(kernel(p, a, FeatureVector{1e6, 0.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(kernel(p, a, FeatureVector{1.0, 2.0, 3.0}), GpError);
}

TEST_CASE("predict: prior fallback without data") {
    GpModel model(FeatureMode::spatial, KernelParams{1.7, {1.0, 1.0}, 0.0});
    auto pred = model.predict({5.0, 5.0});
    CHECK(pred.mean == 0.0);
    CHECK(pred.variance == doctest::Approx(1.7));
}

TEST_CASE("predict matches dense-solve oracle on small problems") {
    Rng rng(31);
    for (size_t n : {3u, 5u, 10u}) {
        KernelParams p{1.3, {2.0, 3.5}, 0.01};
        std::vector<FeatureVector> x;
        std::vector<double> y;
        for (size_t i = 0; i < n; ++i) {
            x.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
            y.push_back(rng.normal());
        }
        GpModel model(FeatureMode::spatial, p, x, y);
        for (int t = 0; t < 5; ++t) {
            FeatureVector q{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
            auto got = model.predict(q);
            auto want = dense_oracle(p, x, y, q);
            CHECK(got.mean == doctest::Approx(want.mean).epsilon(1e-9));
            CHECK(got.variance == doctest::Approx(want.variance).epsilon(1e-9));
        }
    }
}

TEST_CASE("predict: zero-noise interpolation at training points") {
    KernelParams p{2.0, {1.5, 1.5}, 0.0};
    std::vector<FeatureVector> x{{0.0, 0.0}, {3.0, 1.0}, {-2.0, 4.0}};
    std::vector<double> y{1.0, -2.0, 0.5};
    GpModel model(FeatureMode::spatial, p, x, y);
    for (size_t i = 0; i < x.size(); ++i) {
        auto pred = model.predict(x[i]);
        CHECK(pred.mean == doctest::Approx(y[i]).epsilon(1e-6));
        CHECK(pred.variance <= 1e-6 * p.signal_var);
    }
}

TEST_CASE("predict: variance bound and permutation invariance") {
    Rng rng(8);
    KernelParams p{1.0, {1.0, 1.0}, 0.05};
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (int i = 0; i < 12; ++i) {
        x.push_back({rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)});
        y.push_back(rng.normal());
    }
    GpModel model(FeatureMode::spatial, p, x, y);

    std::vector<FeatureVector> xr(x.rbegin(), x.rend());
    std::vector<double> yr(y.rbegin(), y.rend());
    GpModel reversed(FeatureMode::spatial, p, xr, yr);

    for (int t = 0; t < 20; ++t) {
        FeatureVector q{rng.uniform(-2.0, 7.0), rng.uniform(-2.0, 7.0)};
        auto pred = model.predict(q);
        CHECK(pred.variance >= 0.0);
        CHECK(pred.variance <= p.signal_var + p.noise_var + 1e-9);
        auto pred_r = reversed.predict(q);
        CHECK(pred.mean == doctest::Approx(pred_r.mean).epsilon(1e-9));
        CHECK(pred.variance == doctest::Approx(pred_r.variance).epsilon(1e-9));
    }
}

TEST_CASE("adding a training point never raises predictive variance") {
    Rng rng(21);
    KernelParams p{1.0, {1.0, 1.0}, 0.01};
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
        x.push_back({rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0)});
        y.push_back(rng.normal());
    }
    GpModel small(FeatureMode::spatial, p, x, y);
    auto x2 = x;
    auto y2 = y;
    x2.push_back({2.0, 2.0});
    y2.push_back(0.3);
    GpModel big(FeatureMode::spatial, p, x2, y2);
    for (int t = 0; t < 20; ++t) {
        FeatureVector q{rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0)};
        CHECK(big.predict(q).variance <= small.predict(q).variance + 1e-9);
    }
}

TEST_CASE("geometry consistency: equal features give equal predictions") {
    // Two dt-mode queries with identical feature vectors must coincide;
    // position-only differences are bounded by the kernel's smoothness.
    Rng rng(14);
    KernelParams p{1.0, std::vector<double>(102, 20.0), 0.01};
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        FeatureVector f{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)};
        for (int j = 0; j < kCdfFeatureCount; ++j) f.push_back(rng.uniform(-30.0, 10.0));
        std::sort(f.begin() + 2, f.end());
        x.push_back(f);
        y.push_back(rng.normal());
    }
    GpModel model(FeatureMode::dt, p, x, y);

    FeatureVector q = x[0];
    q[0] += 37.0;  // same CDF block, shifted position
    auto a = model.predict(q);
    auto b = model.predict(q);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);

    // Lipschitz-style bound in the position block: |dmean/dx| is limited by
    // sum |alpha_i| * sigma_f^2 / (l * sqrt(e)).
    // Position-only shift: |dmean| <= sum_i |alpha_i| * sigma_f^2/(l sqrt(e))
    // per moved coordinate. Recover alpha with an independent dense solve.
    const size_t n = x.size();
    Eigen::MatrixXd km(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd yt(static_cast<Eigen::Index>(n));
    double ymean = 0.0;
    for (double v : y) ymean += v;
    ymean /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        yt(static_cast<Eigen::Index>(i)) = y[i] - ymean;
        for (size_t j = 0; j < n; ++j)
            km(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kernel(p, x[i], x[j]) + (i == j ? p.noise_var : 0.0);
    }
    Eigen::VectorXd alpha = km.fullPivLu().solve(yt);
    double delta = 0.5;
    FeatureVector q2 = q;
    q2[0] += delta;
    double lipschitz = alpha.cwiseAbs().sum() * p.signal_var / (20.0 * std::sqrt(std::exp(1.0)));
    CHECK(std::abs(model.predict(q2).mean - model.predict(q).mean) <= lipschitz * delta + 1e-9);
}

TEST_CASE("fit: recovers a known lengthscale within x2") {
    // Draw D=200 targets from a GP with known hyperparameters.
    const int n = 200;
    const double true_ls = 5.0, true_sf = 1.0, true_noise = 0.01;
    Rng rng(99);
    std::vector<FeatureVector> x;
    for (int i = 0; i < n; ++i) x.push_back({rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0)});

    Eigen::MatrixXd k(n, n);
    KernelParams truth{true_sf, {true_ls, true_ls}, 0.0};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = kernel(truth, x[static_cast<size_t>(i)], x[static_cast<size_t>(j)]);
    k.diagonal().array() += 1e-10;
    Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    Eigen::VectorXd f = l * z;

    QuantileDataset data;
    data.epsilon = 0.01;
    for (int i = 0; i < n; ++i) {
        double q = f(i) + std::sqrt(true_noise) * rng.normal();
        data.entries.push_back({{x[static_cast<size_t>(i)][0], x[static_cast<size_t>(i)][1]}, 0.01, std::exp(q), q});
    }

    FitOptions opts;
    opts.restarts = 3;
    opts.iterations = 120;
    opts.seed = 4;
    GpModel model = GpModel::fit(FeatureMode::spatial, data, x, opts);
    double fitted_ls = model.params().lengthscales[0];
    CHECK(fitted_ls >= true_ls / 2.0);
    CHECK(fitted_ls <= true_ls * 2.0);
}

TEST_CASE("fit: duplicate positions with conflicting targets succeed via noise") {
    QuantileDataset data;
    data.epsilon = 0.01;
    std::vector<FeatureVector> x;
    for (int i = 0; i < 6; ++i) {
        Vec2 p{static_cast<double>(i / 2), 0.0};  // three positions, duplicated
        double q = (i % 2 == 0) ? 1.0 : -1.0;
        data.entries.push_back({p, 0.01, std::exp(q), q});
        x.push_back({p.x, p.y});
    }
    FitOptions opts;
    opts.restarts = 2;
    opts.iterations = 60;
    GpModel model = GpModel::fit(FeatureMode::spatial, data, x, opts);
    CHECK(model.params().noise_var > 0.0);
    CHECK(std::isfinite(model.predict({0.5, 0.0}).mean));
}

TEST_CASE("fit input validation") {
    QuantileDataset data;
    data.epsilon = 0.01;
    std::vector<FeatureVector> x;
    for (int i = 0; i < 2; ++i) {
        data.entries.push_back({{static_cast<double>(i), 0.0}, 0.01, 1.0, 0.0});
        x.push_back({static_cast<double>(i), 0.0});
    }
    CHECK_THROWS_AS(GpModel::fit(FeatureMode::spatial, data, x), GpError);  // D < 3

    data.entries.push_back({{5.0, 0.0}, 0.01, 1.0, std::nan("")});
    x.push_back({5.0, 0.0});
    CHECK_THROWS_AS(GpModel::fit(FeatureMode::spatial, data, x), GpError);  // NaN target
}

TEST_CASE("serialize/deserialize reproduces predictions bit-for-bit") {
    Rng rng(3);
    KernelParams p{0.9, {3.0, 4.0}, 0.02};
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (int i = 0; i < 7; ++i) {
        x.push_back({rng.uniform(0.0, 9.0), rng.uniform(0.0, 9.0)});
        y.push_back(rng.normal());
    }
    GpModel model(FeatureMode::spatial, p, x, y);
    GpModel restored = GpModel::deserialize(model.serialize());
    for (int t = 0; t < 10; ++t) {
        FeatureVector q{rng.uniform(0.0, 9.0), rng.uniform(0.0, 9.0)};
        auto a = model.predict(q);
        auto b = restored.predict(q);
        CHECK(a.mean == b.mean);
        CHECK(a.variance == b.variance);
    }
    CHECK_THROWS_AS(GpModel::deserialize("mode bogus\n"), GpError);
}
