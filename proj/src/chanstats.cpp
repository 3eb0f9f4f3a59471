#include "fadetwin/chanstats.hpp"

#include <algorithm>
#include <cmath>

#include "fadetwin/raytwin.hpp"
#include "fadetwin/rng.hpp"

namespace fadetwin {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
}  // namespace

double bessel_j0(double x) {
    x = std::abs(x);
    if (x <= 12.0) {
        // Ascending series sum_m (-x^2/4)^m / (m!)^2
        double term = 1.0, sum = 1.0;
        double q = -0.25 * x * x;
        for (int m = 1; m < 100; ++m) {
            term *= q / (static_cast<double>(m) * m);
            sum += term;
            if (std::abs(term) < 1e-17 * (std::abs(sum) + 1.0)) break;
        }
        return sum;
    }
    // Hankel asymptotic expansion, DLMF 10.17.3 coefficients for nu = 0.
    double z = 1.0 / (x * x);
    double p = 1.0 + z * (-9.0 / 128.0 + z * (3675.0 / 32768.0 + z * (-2401245.0 / 4194304.0)));
    double q = (1.0 / x) * (-1.0 / 8.0 +
                            z * (75.0 / 1024.0 + z * (-59535.0 / 262144.0 + z * (57972915.0 / 33554432.0))));
    double chi = x - 0.25 * kPi;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw StatsError("EmpiricalCdf needs at least 2 samples");
    for (double v : samples_)
        if (!(v >= 0.0)) throw StatsError("EmpiricalCdf samples must be non-negative");
    std::sort(samples_.begin(), samples_.end());
}

double EmpiricalCdf::eval(double beta) const {
    auto it = std::upper_bound(samples_.begin(), samples_.end(), beta);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
}

double EmpiricalCdf::mean() const {
    double s = 0.0;
    for (double v : samples_) s += v;
    return s / static_cast<double>(samples_.size());
}

double empirical_quantile(const EmpiricalCdf& cdf, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw StatsError("epsilon must be in (0, 1)");
    const auto n = cdf.size();
    auto idx = static_cast<size_t>(std::ceil(static_cast<double>(n) * epsilon)) - 1;
    if (idx >= n) idx = n - 1;
    return cdf.samples()[idx];
}

QuantileSample log_quantile(const EmpiricalCdf& cdf, double epsilon, Vec2 position) {
    double rho = empirical_quantile(cdf, epsilon);
    if (!(rho > 0.0)) throw StatsError("zero-power quantile (blocked position)");
    return {position, epsilon, rho, std::log(rho)};
}

double spatial_correlation(const WssusModel& model, double distance) {
    return bessel_j0(kTwoPi * distance / model.wavelength);
}

std::complex<double> frequency_correlation(const WssusModel& model, double delta_f, PhaseConvention convention) {
    double theta = model.tau_max * delta_f;
    if (convention == PhaseConvention::physical) theta *= kTwoPi;
    if (theta == 0.0) return {1.0, 0.0};
    // (1 - e^{-i theta}) / (i theta)
    std::complex<double> num = 1.0 - std::polar(1.0, -theta);
    return num / std::complex<double>(0.0, theta);
}

double decorrelation_frequency(const WssusModel& model) {
    // |c_f| drops below the 0.33 uncorrelatedness threshold at
    // theta = 4.6 (paper convention).
    return 4.6 / model.tau_max;
}

double log_power_pdf(const WssusModel& model, double q) {
    return model.rate * std::exp(q - model.rate * std::exp(q));
}

std::vector<std::vector<std::complex<double>>> wssus_sample_field(const WssusModel& model,
                                                                  std::span<const Vec2> positions,
                                                                  std::span<const double> freqs,
                                                                  PhaseConvention convention,
                                                                  std::uint64_t seed) {
    if (model.n_waves < 1) throw StatsError("n_waves must be >= 1");
    Rng rng(seed);
    const double k = kTwoPi / model.wavelength;
    const size_t np = positions.size(), nf = freqs.size();
    std::vector<std::vector<std::complex<double>>> h(np, std::vector<std::complex<double>>(nf, {0.0, 0.0}));

    std::vector<std::complex<double>> pos_phase(np), freq_phase(nf);
    const double amp_scale = 1.0 / std::sqrt(2.0 * model.n_waves);
    for (int n = 0; n < model.n_waves; ++n) {
        std::complex<double> alpha{amp_scale * rng.normal(), amp_scale * rng.normal()};
        double phi = rng.uniform(0.0, kTwoPi);
        double tau = rng.uniform(0.0, model.tau_max);
        Vec2 r{std::cos(phi), std::sin(phi)};
        for (size_t i = 0; i < np; ++i) pos_phase[i] = std::polar(1.0, -k * dot(positions[i], r));
        for (size_t j = 0; j < nf; ++j) {
            double theta = convention == PhaseConvention::paper ? tau * freqs[j] : kTwoPi * tau * freqs[j];
            freq_phase[j] = std::polar(1.0, -theta);
        }
        for (size_t i = 0; i < np; ++i) {
            std::complex<double> a = alpha * pos_phase[i];
            for (size_t j = 0; j < nf; ++j) h[i][j] += a * freq_phase[j];
        }
    }
    return h;
}

double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
    const auto& sa = a.samples();
    const auto& sb = b.samples();
    double d = 0.0;
    size_t ia = 0, ib = 0;
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    while (ia < sa.size() && ib < sb.size()) {
        double v = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= v) ++ia;
        while (ib < sb.size() && sb[ib] <= v) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return d;
}

FreqSpaceReport compare_freq_vs_space(const Scene& scene, int tx_id, int max_order) {
    if (tx_id < 0 || tx_id >= static_cast<int>(scene.tx_positions.size()))
        throw StatsError("tx_id out of range");
    Vec2 tx = scene.tx_positions[static_cast<size_t>(tx_id)];

    auto normalize = [](std::vector<double> v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (!(mean > 0.0)) throw StatsError("blocked position: zero mean power");
        for (double& x : v) x /= mean;
        return v;
    };

    auto freq_power = normalize(power_samples(scene, tx, max_order));
    auto grid_power = normalize(local_grid_power(scene, tx, 400, -1.0, max_order));

    EmpiricalCdf freq_cdf(std::move(freq_power));
    EmpiricalCdf grid_cdf(std::move(grid_power));

    FreqSpaceReport report;
    report.ks_distance = ks_distance(freq_cdf, grid_cdf);
    double qf = empirical_quantile(freq_cdf, 0.01);
    double qg = empirical_quantile(grid_cdf, 0.01);
    if (!(qf > 0.0) || !(qg > 0.0)) throw StatsError("blocked position: zero 0.01-quantile");
    report.quantile_gap_db = std::abs(10.0 * std::log10(qf / qg));
    return report;
}

}  // namespace fadetwin
