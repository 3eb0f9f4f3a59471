#pragma once

#include <span>
#include <stdexcept>

#include "fadetwin/chanstats.hpp"
#include "fadetwin/gpredict.hpp"

namespace fadetwin {

struct RateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LinkBudget {
    double tx_power = 1.0;   // W
    double noise_var = 1.0;  // W
    double bandwidth = 1.0;  // Hz
};

struct RatePolicy {
    double epsilon = 0.01;  // outage target
    double delta = 0.10;    // confidence parameter
};

enum class RateSource { dt_gp, spatial_gp, direct_dt };

struct RateDecision {
    double rate = 0.0;  // bits/s/Hz
    RateSource source = RateSource::dt_gp;
};

// Inverse error function, |error| <= 1e-10 (rational initial guess plus
// Newton refinement on erf).
double erf_inv(double z);

// rate = log2(1 + exp(mu + sqrt(2) sigma erf_inv(2 delta - 1))).
// The predictive distribution is over q_eps = ln of the eps-quantile SNR.
RateDecision select_rate(const PredictiveDistribution& pred, const RatePolicy& policy,
                         RateSource source = RateSource::dt_gp);

// R_eps = log2(1 + P_tx rho_eps / noise_var) from the ground-truth CDF.
double outage_capacity(const EmpiricalCdf& truth_cdf, const LinkBudget& budget, double epsilon);

// Selected rate over eps-outage capacity; throws for r_eps <= 0.
double normalized_rate(const RateDecision& decision, double r_eps);

// Fraction of positions where the selected rate exceeds the true capacity.
double meta_probability(std::span<const RateDecision> decisions, std::span<const double> capacities);

}  // namespace fadetwin
