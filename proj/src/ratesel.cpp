#include "fadetwin/ratesel.hpp"

#include <cmath>
#include <limits>

namespace fadetwin {

namespace {
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kTwoOverSqrtPi = 1.12837916709551257390;

// log2(1 + e^x) without overflow for large x.
double log2_one_plus_exp(double x) {
    if (x > 36.0) return (x + std::log1p(std::exp(-x))) / kLn2;
    return std::log1p(std::exp(x)) / kLn2;
}

}  // namespace

double erf_inv(double z) {
    if (!(z > -1.0 && z < 1.0)) {
        if (z == 1.0 || z == -1.0) return z * std::numeric_limits<double>::infinity();
        throw RateError("erf_inv domain is (-1, 1)");
    }
    if (z == 0.0) return 0.0;

    // Initial guess: Giles (2012) rational approximation in log(1 - z^2).
    double w = -std::log((1.0 - z) * (1.0 + z));
    double x;
    if (w < 6.25) {
        w -= 3.125;
        double p = -3.6444120640178196996e-21;
        p = -1.685059138182016589e-19 + p * w;
        p = 1.2858480715256400167e-18 + p * w;
        p = 1.115787767802518096e-17 + p * w;
        p = -1.333171662854620906e-16 + p * w;
        p = 2.0972767875968561637e-17 + p * w;
        p = 6.6376381343583238325e-15 + p * w;
        p = -4.0545662729752068639e-14 + p * w;
        p = -8.1519341976054721522e-14 + p * w;
        p = 2.6335093153082322977e-12 + p * w;
        p = -1.2975133253453532498e-11 + p * w;
        p = -5.4154120542946279317e-11 + p * w;
        p = 1.051212273321532285e-09 + p * w;
        p = -4.1126339803469836976e-09 + p * w;
        p = -2.9070369957882005086e-08 + p * w;
        p = 4.2347877827932403518e-07 + p * w;
        p = -1.3654692000834678645e-06 + p * w;
        p = -1.3882523362786468719e-05 + p * w;
        p = 0.0001867342080340571352 + p * w;
        p = -0.00074070253416626697512 + p * w;
        p = -0.0060336708714301490533 + p * w;
        p = 0.24015818242558961693 + p * w;
        p = 1.6536545626831027356 + p * w;
        x = p * z;
    } else if (w < 16.0) {
        w = std::sqrt(w) - 3.25;
        double p = 2.2137376921775787049e-09;
        p = 9.0756561938885390979e-08 + p * w;
        p = -2.7517406297064545428e-07 + p * w;
        p = 1.8239629214389227755e-08 + p * w;
        p = 1.5027403968909827627e-06 + p * w;
        p = -4.013867526981545969e-06 + p * w;
        p = 2.9234449089955446044e-06 + p * w;
        p = 1.2475304481671778723e-05 + p * w;
        p = -4.7318229009055733981e-05 + p * w;
        p = 6.8284851459573175448e-05 + p * w;
        p = 2.4031110387097893999e-05 + p * w;
        p = -0.0003550375203628474796 + p * w;
        p = 0.00095328937973738049703 + p * w;
        p = -0.0016882755560235047313 + p * w;
        p = 0.0024914420961078508066 + p * w;
        p = -0.0037512085075692412107 + p * w;
        p = 0.005370914553590063617 + p * w;
        p = 1.0052589676941592334 + p * w;
        p = 3.0838856104922207635 + p * w;
        x = p * z;
    } else {
        w = std::sqrt(w) - 5.0;
        double p = -2.7109920616438573243e-11;
        p = -2.5556418169965252055e-10 + p * w;
        p = 1.5076572693500548083e-09 + p * w;
        p = -3.7894654401267369937e-09 + p * w;
        p = 7.6157012080783393804e-09 + p * w;
        p = -1.4960026627149240478e-08 + p * w;
        p = 2.9147953450901080826e-08 + p * w;
        p = -6.7711997758452339498e-08 + p * w;
        p = 2.2900482228026654717e-07 + p * w;
        p = -9.9298272942317002539e-07 + p * w;
        p = 4.5260625972231537039e-06 + p * w;
        p = -1.9681778105531670567e-05 + p * w;
        p = 7.5995277030017761139e-05 + p * w;
        p = -0.00021503011930044477347 + p * w;
        p = -0.00013871931833623122026 + p * w;
        p = 1.0103004648645343977 + p * w;
        p = 4.8499064014085844221 + p * w;
        x = p * z;
    }

    // Newton refinement on erf(x) = z.
    for (int i = 0; i < 3; ++i) {
        double err = std::erf(x) - z;
        x -= err / (kTwoOverSqrtPi * std::exp(-x * x));
    }
    return x;
}

RateDecision select_rate(const PredictiveDistribution& pred, const RatePolicy& policy, RateSource source) {
    if (!(pred.variance >= 0.0)) throw RateError("negative predictive variance");
    double sigma = std::sqrt(pred.variance);
    double exponent = pred.mean;
    if (sigma > 0.0) exponent += std::sqrt(2.0) * sigma * erf_inv(2.0 * policy.delta - 1.0);
    return {log2_one_plus_exp(exponent), source};
}

double outage_capacity(const EmpiricalCdf& truth_cdf, const LinkBudget& budget, double epsilon) {
    double rho = empirical_quantile(truth_cdf, epsilon);
    return std::log2(1.0 + budget.tx_power * rho / budget.noise_var);
}

double normalized_rate(const RateDecision& decision, double r_eps) {
    if (!(r_eps > 0.0)) throw RateError("normalized rate undefined for r_eps <= 0");
    return decision.rate / r_eps;
}

double meta_probability(std::span<const RateDecision> decisions, std::span<const double> capacities) {
    if (decisions.empty() || decisions.size() != capacities.size())
        throw RateError("meta_probability needs aligned non-empty lists");
    size_t violations = 0;
    for (size_t i = 0; i < decisions.size(); ++i)
        if (decisions[i].rate > capacities[i]) ++violations;
    return static_cast<double>(violations) / static_cast<double>(decisions.size());
}

}  // namespace fadetwin
