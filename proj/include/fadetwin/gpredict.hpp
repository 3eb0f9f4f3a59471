#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fadetwin/chanstats.hpp"
#include "fadetwin/geometry.hpp"

namespace fadetwin {

struct GpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FeatureMode { spatial, dt };

// 2 entries (x, y) in spatial mode; 102 in dt mode (x, y, then 100
// dB-scale quantiles of the twin's power CDF at mid-point probabilities).
using FeatureVector = std::vector<double>;

constexpr int kCdfFeatureCount = 100;

FeatureVector build_features(FeatureMode mode, Vec2 position, const EmpiricalCdf* twin_cdf);

struct KernelParams {
    double signal_var = 1.0;
    std::vector<double> lengthscales;  // one per feature dimension (ARD)
    double noise_var = 0.0;
};

// Squared-exponential ARD kernel.
double kernel(const KernelParams& params, const FeatureVector& a, const FeatureVector& b);

struct PredictiveDistribution {
    double mean = 0.0;
    double variance = 0.0;
};

struct FitOptions {
    int restarts = 5;
    int iterations = 200;
    std::uint64_t seed = 0;
};

class GpModel {
public:
    // Prior-only model (no data): predicts mean 0, variance signal_var.
    GpModel(FeatureMode mode, KernelParams params);

    // Exact GP with fixed hyperparameters; factorizes K + noise_var*I with
    // adaptive diagonal jitter.
    GpModel(FeatureMode mode, KernelParams params, std::vector<FeatureVector> features,
            std::vector<double> targets);

    // Maximum marginal likelihood via deterministic multi-start coordinate
    // search on log-parameters. Lengthscales are tied in two groups
    // (position, CDF features).
    static GpModel fit(FeatureMode mode, const QuantileDataset& dataset,
                       const std::vector<FeatureVector>& features, const FitOptions& opts = {});

    PredictiveDistribution predict(const FeatureVector& query) const;

    FeatureMode mode() const { return mode_; }
    const KernelParams& params() const { return params_; }
    double log_marginal_likelihood() const { return log_marginal_; }

    // Text round-trip with 17-significant-digit floats.
    std::string serialize() const;
    static GpModel deserialize(const std::string& text);

private:
    void factorize();

    FeatureMode mode_;
    KernelParams params_;
    std::vector<FeatureVector> features_;
    std::vector<double> targets_;
    double prior_mean_ = 0.0;
    double log_marginal_ = 0.0;
    std::vector<double> chol_;   // row-major lower factor of K + noise I
    std::vector<double> alpha_;  // (K + noise I)^{-1} (y - mean)
};

}  // namespace fadetwin
