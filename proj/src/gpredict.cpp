#include "fadetwin/gpredict.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fadetwin/rng.hpp"

namespace fadetwin {

namespace {

constexpr double kLn2Pi = 1.83787706640934548356;

size_t feature_dim(FeatureMode mode) { return mode == FeatureMode::spatial ? 2u : 2u + kCdfFeatureCount; }

Eigen::MatrixXd kernel_matrix(const KernelParams& params, const std::vector<FeatureVector>& x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = kernel(params, x[static_cast<size_t>(i)], x[static_cast<size_t>(j)]);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// Cholesky of K + noise*I with the adaptive jitter ladder. Returns the
// jitter actually used; throws past the ladder's end.
Eigen::LLT<Eigen::MatrixXd> factorize_with_jitter(const Eigen::MatrixXd& k, double noise_var) {
    const auto n = k.rows();
    const double scale = k.trace() / static_cast<double>(n);
    Eigen::MatrixXd m = k;
    m.diagonal().array() += noise_var;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt;
    for (double jitter = 1e-10 * scale; jitter <= 1e-4 * scale; jitter *= 10.0) {
        Eigen::MatrixXd mj = m;
        mj.diagonal().array() += jitter;
        llt.compute(mj);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw GpError("kernel matrix not positive definite after max jitter");
}

double neg_log_marginal(const KernelParams& params, const std::vector<FeatureVector>& x,
                        const Eigen::VectorXd& y_centered) {
    auto llt = factorize_with_jitter(kernel_matrix(params, x), params.noise_var);
    Eigen::VectorXd alpha = llt.solve(y_centered);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < llt.matrixLLT().rows(); ++i) log_det += std::log(llt.matrixLLT()(i, i));
    return 0.5 * y_centered.dot(alpha) + log_det + 0.5 * static_cast<double>(y_centered.size()) * kLn2Pi;
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

FeatureVector build_features(FeatureMode mode, Vec2 position, const EmpiricalCdf* twin_cdf) {
    FeatureVector f{position.x, position.y};
    if (mode == FeatureMode::spatial) return f;
    if (twin_cdf == nullptr) throw GpError("dt feature mode requires a twin CDF");
    f.reserve(2 + kCdfFeatureCount);
    for (int j = 0; j < kCdfFeatureCount; ++j) {
        double u = (j + 0.5) / kCdfFeatureCount;
        double rho = empirical_quantile(*twin_cdf, u);
        if (!(rho > 0.0)) throw GpError("blocked position: zero power in twin CDF");
        f.push_back(10.0 * std::log10(rho));
    }
    return f;
}

double kernel(const KernelParams& params, const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size() || a.size() != params.lengthscales.size())
        throw GpError("kernel dimension mismatch");
    double d2 = 0.0;
    for (size_t j = 0; j < a.size(); ++j) {
        double r = (a[j] - b[j]) / params.lengthscales[j];
        d2 += r * r;
    }
    return params.signal_var * std::exp(-0.5 * d2);
}

GpModel::GpModel(FeatureMode mode, KernelParams params) : mode_(mode), params_(std::move(params)) {
    if (params_.lengthscales.size() != feature_dim(mode_)) throw GpError("lengthscale dimension mismatch");
}

GpModel::GpModel(FeatureMode mode, KernelParams params, std::vector<FeatureVector> features,
                 std::vector<double> targets)
    : mode_(mode), params_(std::move(params)), features_(std::move(features)), targets_(std::move(targets)) {
    if (params_.lengthscales.size() != feature_dim(mode_)) throw GpError("lengthscale dimension mismatch");
    if (features_.size() != targets_.size()) throw GpError("features/targets size mismatch");
    for (const auto& f : features_)
        if (f.size() != feature_dim(mode_)) throw GpError("feature dimension mismatch");
    for (double t : targets_)
        if (!std::isfinite(t)) throw GpError("NaN in targets");
    if (!features_.empty()) factorize();
}

void GpModel::factorize() {
    const auto n = static_cast<Eigen::Index>(features_.size());
    Eigen::VectorXd y(n);
    prior_mean_ = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prior_mean_ += targets_[static_cast<size_t>(i)];
    prior_mean_ /= static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = targets_[static_cast<size_t>(i)] - prior_mean_;

    auto llt = factorize_with_jitter(kernel_matrix(params_, features_), params_.noise_var);
    Eigen::VectorXd alpha = llt.solve(y);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixLLT()(i, i));
    log_marginal_ = -0.5 * y.dot(alpha) - log_det - 0.5 * static_cast<double>(n) * kLn2Pi;

    chol_.assign(static_cast<size_t>(n * n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) chol_[static_cast<size_t>(i * n + j)] = llt.matrixLLT()(i, j);
    alpha_.assign(static_cast<size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) alpha_[static_cast<size_t>(i)] = alpha(i);
}

PredictiveDistribution GpModel::predict(const FeatureVector& query) const {
    if (query.size() != feature_dim(mode_)) throw GpError("query dimension mismatch");
    if (features_.empty()) return {prior_mean_, params_.signal_var};

    const auto n = features_.size();
    std::vector<double> ks(n);
    for (size_t i = 0; i < n; ++i) ks[i] = kernel(params_, features_[i], query);

    double mean = prior_mean_;
    for (size_t i = 0; i < n; ++i) mean += ks[i] * alpha_[i];

    // v = L^{-1} k*, forward substitution on the stored lower factor.
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) {
        double s = ks[i];
        for (size_t j = 0; j < i; ++j) s -= chol_[i * n + j] * v[j];
        v[i] = s / chol_[i * n + i];
    }
    double var = params_.signal_var;
    for (size_t i = 0; i < n; ++i) var -= v[i] * v[i];
    return {mean, std::max(0.0, var)};
}

GpModel GpModel::fit(FeatureMode mode, const QuantileDataset& dataset,
                     const std::vector<FeatureVector>& features, const FitOptions& opts) {
    const size_t n = dataset.entries.size();
    if (n < 3) throw GpError("fit needs at least 3 training points");
    if (features.size() != n) throw GpError("features/dataset size mismatch");

    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(dataset.entries[i].q)) throw GpError("NaN in targets");
        mean += dataset.entries[i].q;
    }
    mean /= static_cast<double>(n);
    double var_y = 0.0;
    for (size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = dataset.entries[i].q - mean;
        var_y += y(static_cast<Eigen::Index>(i)) * y(static_cast<Eigen::Index>(i));
    }
    var_y = std::max(var_y / static_cast<double>(n), 1e-12);

    // Two lengthscale groups: position (dims 0-1) and, in dt mode, the
    // shared CDF group (dims 2..101).
    const int n_groups = mode == FeatureMode::spatial ? 1 : 2;
    const int n_params = 2 + n_groups;  // ln signal_var, ln group scales..., ln noise_var

    auto expand = [&](const std::vector<double>& log_p) {
        KernelParams kp;
        kp.signal_var = std::exp(log_p[0]);
        kp.lengthscales.assign(feature_dim(mode), std::exp(log_p[1]));
        if (n_groups == 2)
            for (size_t j = 2; j < feature_dim(mode); ++j) kp.lengthscales[j] = std::exp(log_p[2]);
        kp.noise_var = std::exp(log_p[static_cast<size_t>(n_params) - 1]);
        return kp;
    };
    auto objective = [&](const std::vector<double>& log_p) {
        try {
            return neg_log_marginal(expand(log_p), features, y);
        } catch (const GpError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<double> best_p;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
        Rng rng(mix_seed(opts.seed, "gp_restart_" + std::to_string(r)));
        std::vector<double> p(static_cast<size_t>(n_params));
        p[0] = std::log(var_y * rng.uniform(0.5, 2.0));
        p[1] = rng.uniform(std::log(5.0), std::log(100.0));
        if (n_groups == 2) p[2] = rng.uniform(std::log(5.0), std::log(200.0));
        p[static_cast<size_t>(n_params) - 1] = std::log(var_y) + rng.uniform(std::log(1e-4), std::log(1e-1));

        double cur = objective(p);
        double step = 0.5;
        for (int iter = 0; iter < opts.iterations && step >= 1e-3; ++iter) {
            bool improved = false;
            for (int c = 0; c < n_params; ++c) {
                for (double sign : {1.0, -1.0}) {
                    std::vector<double> trial = p;
                    trial[static_cast<size_t>(c)] += sign * step;
                    double obj = objective(trial);
                    if (obj < cur) {
                        cur = obj;
                        p = trial;
                        improved = true;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (cur < best_obj) {
            best_obj = cur;
            best_p = p;
        }
    }
    if (!std::isfinite(best_obj)) throw GpError("hyperparameter search failed on every restart");

    std::vector<FeatureVector> x = features;
    std::vector<double> targets(n);
    for (size_t i = 0; i < n; ++i) targets[i] = dataset.entries[i].q;
    return GpModel(mode, expand(best_p), std::move(x), std::move(targets));
}

std::string GpModel::serialize() const {
    std::ostringstream out;
    out << "mode " << (mode_ == FeatureMode::spatial ? "spatial" : "dt") << '\n';
    out << "signal_var " << fmt_double(params_.signal_var) << '\n';
    out << "noise_var " << fmt_double(params_.noise_var) << '\n';
    out << "lengthscales";
    for (double l : params_.lengthscales) out << ' ' << fmt_double(l);
    out << '\n';
    out << "train " << features_.size() << ' ' << feature_dim(mode_) << '\n';
    for (size_t i = 0; i < features_.size(); ++i) {
        for (double v : features_[i]) out << fmt_double(v) << ' ';
        out << fmt_double(targets_[i]) << '\n';
    }
    return out.str();
}

GpModel GpModel::deserialize(const std::string& text) {
    std::istringstream in(text);
    std::string kw, mode_s;
    FeatureMode mode;
    KernelParams params;
    if (!(in >> kw >> mode_s) || kw != "mode") throw GpError("bad model text: mode");
    if (mode_s == "spatial")
        mode = FeatureMode::spatial;
    else if (mode_s == "dt")
        mode = FeatureMode::dt;
    else
        throw GpError("bad model text: unknown mode");
    if (!(in >> kw >> params.signal_var) || kw != "signal_var") throw GpError("bad model text: signal_var");
    if (!(in >> kw >> params.noise_var) || kw != "noise_var") throw GpError("bad model text: noise_var");
    if (!(in >> kw) || kw != "lengthscales") throw GpError("bad model text: lengthscales");
    params.lengthscales.resize(feature_dim(mode));
    for (double& l : params.lengthscales)
        if (!(in >> l)) throw GpError("bad model text: lengthscales");
    size_t n, dim;
    if (!(in >> kw >> n >> dim) || kw != "train" || dim != feature_dim(mode))
        throw GpError("bad model text: train header");
    std::vector<FeatureVector> features(n, FeatureVector(dim));
    std::vector<double> targets(n);
    for (size_t i = 0; i < n; ++i) {
        for (double& v : features[i])
            if (!(in >> v)) throw GpError("bad model text: train row");
        if (!(in >> targets[i])) throw GpError("bad model text: train row");
    }
    if (n == 0) return GpModel(mode, std::move(params));
    return GpModel(mode, std::move(params), std::move(features), std::move(targets));
}

}  // namespace fadetwin
