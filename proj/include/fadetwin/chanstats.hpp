#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "fadetwin/geometry.hpp"
#include "fadetwin/scene.hpp"

namespace fadetwin {

struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bessel function of the first kind, order zero. Ascending series for
// small arguments, Hankel asymptotic expansion beyond; absolute error
// below 1e-8 on [0, 100].
double bessel_j0(double x);

class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples);

    // psi(beta) = (#samples <= beta) / n, right-continuous.
    double eval(double beta) const;
    const std::vector<double>& samples() const { return samples_; }
    size_t size() const { return samples_.size(); }
    double mean() const;

private:
    std::vector<double> samples_;  // sorted ascending
};

// Lower order statistic at ceil(n*eps): the largest power whose empirical
// CDF stays below eps.
double empirical_quantile(const EmpiricalCdf& cdf, double epsilon);

struct QuantileSample {
    Vec2 position;
    double epsilon = 0.0;
    double rho = 0.0;  // linear power quantile
    double q = 0.0;    // ln(rho)
};

struct QuantileDataset {
    std::vector<QuantileSample> entries;
    double epsilon = 0.0;
};

// Throws StatsError for a zero-power quantile (fully blocked position).
QuantileSample log_quantile(const EmpiricalCdf& cdf, double epsilon, Vec2 position = {});

enum class PhaseConvention { paper, physical };

struct WssusModel {
    double wavelength = 0.05;  // m
    double tau_max = 1e-6;     // s
    int n_waves = 200;
    double rate = 1.0;         // exponential rate of the power law
};

// c_x(d) = J0(2 pi d / lambda)
double spatial_correlation(const WssusModel& model, double distance);

// c_f(df) = (1 - e^{-i theta}) / (i theta), with theta = tau_max*df under the
// "paper" convention or 2 pi tau_max * df under the "physical" convention.
// c_f(0) = 1 by continuity.
std::complex<double> frequency_correlation(const WssusModel& model, double delta_f, PhaseConvention convention);

// Frequency shift beyond which |c_f| stays below the 0.33 threshold.
double decorrelation_frequency(const WssusModel& model);

// Density of q = ln(p) when p ~ Exp(rate).
double log_power_pdf(const WssusModel& model, double q);

// One realization of the plane-wave sum h(x, f); result[i][j] is position i,
// frequency j. E|h|^2 = 1 by construction.
std::vector<std::vector<std::complex<double>>> wssus_sample_field(const WssusModel& model,
                                                                  std::span<const Vec2> positions,
                                                                  std::span<const double> freqs,
                                                                  PhaseConvention convention,
                                                                  std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b);

struct FreqSpaceReport {
    double ks_distance = 0.0;
    double quantile_gap_db = 0.0;
};

// Frequency-sampled vs locally-grid-sampled power distribution at one tx,
// both normalized to unit mean power; 0.01-quantile gap in dB.
FreqSpaceReport compare_freq_vs_space(const Scene& scene, int tx_id, int max_order);

}  // namespace fadetwin
