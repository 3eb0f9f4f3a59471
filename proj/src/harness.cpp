#include "fadetwin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fadetwin/rng.hpp"

namespace fadetwin {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDbPerNat = 10.0 / 2.30258509299404568402;  // 10 / ln 10

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of empty list");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Seeds Seeds::from_master(std::uint64_t master) {
    return {mix_seed(master, "scene"), mix_seed(master, "twin"), mix_seed(master, "train_split"),
            mix_seed(master, "gp")};
}

double default_snr_scale(const Band& band) {
    double lambda_c = kSpeedOfLight / band.center();
    double p50 = std::pow(lambda_c / (4.0 * kPi * 50.0), 2.0);
    return 1e6 / p50;  // 60 dB median LOS SNR at 50 m
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    Seeds seeds = Seeds::from_master(cfg.seed);
    Scene base = cfg.scene ? *cfg.scene : synthetic_campus(seeds.scene);
    base.validate();

    const int total = static_cast<int>(base.tx_positions.size());
    if (cfg.train_count < 3) throw ConfigError("train count must be at least 3");
    if (cfg.train_count >= total) throw ConfigError("train count must be below the tx count");
    if (cfg.epsilon * base.band.n_points < 1.0)
        throw ConfigError("epsilon too small for the band's sample count");
    if (!(cfg.delta > 0.0 && cfg.delta <= 0.5)) throw ConfigError("delta must be in (0, 0.5]");

    TwinPair pair = generate_twin_pair(base, cfg.perturb, seeds.twin);
    const double snr = cfg.snr_scale > 0.0 ? cfg.snr_scale : default_snr_scale(base.band);

    struct PerPosition {
        int tx_id;
        Vec2 pos;
        double q_truth, q_direct;
        FeatureVector feat_spatial, feat_dt;
    };
    std::vector<PerPosition> eligible;
    std::vector<int> excluded;

    for (int id = 0; id < total; ++id) {
        Vec2 tx = base.tx_positions[static_cast<size_t>(id)];
        auto scale = [&](std::vector<double> p) {
            for (double& v : p) v *= snr;
            return p;
        };
        EmpiricalCdf truth_cdf(scale(power_samples(pair.truth, tx, cfg.max_order)));
        EmpiricalCdf twin_cdf(scale(power_samples(pair.twin, tx, cfg.max_order)));
        double rho_truth = empirical_quantile(truth_cdf, cfg.epsilon);
        double rho_twin = empirical_quantile(twin_cdf, cfg.epsilon);
        if (!(rho_truth > 0.0) || !(rho_twin > 0.0)) {
            excluded.push_back(id);
            continue;
        }
        PerPosition pp;
        pp.tx_id = id;
        pp.pos = tx;
        pp.q_truth = std::log(rho_truth);
        pp.q_direct = std::log(rho_twin);
        pp.feat_spatial = build_features(FeatureMode::spatial, tx, nullptr);
        pp.feat_dt = build_features(FeatureMode::dt, tx, &twin_cdf);
        eligible.push_back(std::move(pp));
    }
    if (static_cast<int>(eligible.size()) <= cfg.train_count)
        throw ConfigError("too many blocked positions for the requested train count");

    // Uniform training split over the eligible positions.
    std::vector<size_t> order(eligible.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(seeds.train_split);
    for (size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[split_rng.uniform_index(i + 1)]);
    std::vector<bool> is_train(eligible.size(), false);
    for (int d = 0; d < cfg.train_count; ++d) is_train[order[static_cast<size_t>(d)]] = true;

    QuantileDataset dataset;
    dataset.epsilon = cfg.epsilon;
    std::vector<FeatureVector> train_spatial, train_dt;
    for (size_t i = 0; i < eligible.size(); ++i) {
        if (!is_train[i]) continue;
        dataset.entries.push_back(
            {eligible[i].pos, cfg.epsilon, std::exp(eligible[i].q_truth), eligible[i].q_truth});
        train_spatial.push_back(eligible[i].feat_spatial);
        train_dt.push_back(eligible[i].feat_dt);
    }

    FitOptions spatial_opts = cfg.gp_options;
    spatial_opts.seed = mix_seed(seeds.gp, "spatial");
    FitOptions dt_opts = cfg.gp_options;
    dt_opts.seed = mix_seed(seeds.gp, "dt");
    GpModel gp_spatial = GpModel::fit(FeatureMode::spatial, dataset, train_spatial, spatial_opts);
    GpModel gp_dt = GpModel::fit(FeatureMode::dt, dataset, train_dt, dt_opts);

    RatePolicy policy{cfg.epsilon, cfg.delta};
    ExperimentReport report;
    report.seeds = seeds;
    report.epsilon = cfg.epsilon;
    report.delta = cfg.delta;
    report.train_count = cfg.train_count;
    report.max_order = cfg.max_order;
    report.snr_scale = snr;
    report.total_tx = total;
    report.excluded_blocked = excluded;

    std::vector<double> err_direct, err_spatial, err_dt, nr_spatial, nr_dt;
    std::vector<RateDecision> dec_spatial, dec_dt;
    std::vector<double> caps;

    for (size_t i = 0; i < eligible.size(); ++i) {
        const auto& pp = eligible[i];
        PositionRecord rec;
        rec.tx_id = pp.tx_id;
        rec.position = pp.pos;
        rec.q_truth = pp.q_truth;
        rec.q_direct = pp.q_direct;
        rec.is_train = is_train[i];

        auto pred_sp = gp_spatial.predict(pp.feat_spatial);
        auto pred_dt = gp_dt.predict(pp.feat_dt);
        rec.q_spatial = pred_sp.mean;
        rec.q_dt = pred_dt.mean;
        rec.err_direct_db = std::abs(pp.q_direct - pp.q_truth) * kDbPerNat;
        rec.err_spatial_db = std::abs(pred_sp.mean - pp.q_truth) * kDbPerNat;
        rec.err_dt_db = std::abs(pred_dt.mean - pp.q_truth) * kDbPerNat;

        // Rate selection sees the observation-level predictive spread.
        PredictiveDistribution obs_sp{pred_sp.mean, pred_sp.variance + gp_spatial.params().noise_var};
        PredictiveDistribution obs_dt{pred_dt.mean, pred_dt.variance + gp_dt.params().noise_var};
        RateDecision rd_sp = select_rate(obs_sp, policy, RateSource::spatial_gp);
        RateDecision rd_dt = select_rate(obs_dt, policy, RateSource::dt_gp);
        rec.rate_spatial = rd_sp.rate;
        rec.rate_dt = rd_dt.rate;
        rec.r_eps = std::log2(1.0 + std::exp(pp.q_truth));
        rec.nr_spatial = normalized_rate(rd_sp, rec.r_eps);
        rec.nr_dt = normalized_rate(rd_dt, rec.r_eps);
        rec.viol_spatial = rd_sp.rate > rec.r_eps;
        rec.viol_dt = rd_dt.rate > rec.r_eps;
        report.records.push_back(rec);

        if (!rec.is_train) {
            err_direct.push_back(rec.err_direct_db);
            err_spatial.push_back(rec.err_spatial_db);
            err_dt.push_back(rec.err_dt_db);
            nr_spatial.push_back(rec.nr_spatial);
            nr_dt.push_back(rec.nr_dt);
            dec_spatial.push_back(rd_sp);
            dec_dt.push_back(rd_dt);
            caps.push_back(rec.r_eps);
        }
    }

    report.aggregates.median_err_direct_db = median(err_direct);
    report.aggregates.median_err_spatial_db = median(err_spatial);
    report.aggregates.median_err_dt_db = median(err_dt);
    double sum_sp = 0.0, sum_dt = 0.0;
    for (double v : nr_spatial) sum_sp += v;
    for (double v : nr_dt) sum_dt += v;
    report.aggregates.mean_nr_spatial = sum_sp / static_cast<double>(nr_spatial.size());
    report.aggregates.mean_nr_dt = sum_dt / static_cast<double>(nr_dt.size());
    report.aggregates.meta_spatial = meta_probability(dec_spatial, caps);
    report.aggregates.meta_dt = meta_probability(dec_dt, caps);
    return report;
}

WssusValidationReport validate_wssus(std::uint64_t seed, int n_waves, int realizations, int power_samples,
                                     PhaseConvention convention) {
    WssusValidationReport report;
    WssusModel model;
    model.wavelength = 0.05;
    model.tau_max = 1e-6;
    model.n_waves = n_waves;

    // Spatial correlation over lags in [0, 3 lambda].
    const int n_lags = 31;
    std::vector<Vec2> positions;
    for (int i = 0; i < n_lags; ++i)
        positions.push_back({3.0 * model.wavelength * static_cast<double>(i) / (n_lags - 1), 0.0});
    std::vector<double> f0{0.0};
    std::vector<std::complex<double>> corr_x(static_cast<size_t>(n_lags), {0.0, 0.0});
    for (int r = 0; r < realizations; ++r) {
        auto h = wssus_sample_field(model, positions, f0, convention,
                                    mix_seed(seed, "cx_" + std::to_string(r)));
        for (int i = 0; i < n_lags; ++i)
            corr_x[static_cast<size_t>(i)] += h[static_cast<size_t>(i)][0] * std::conj(h[0][0]);
    }
    double se = 0.0;
    for (int i = 0; i < n_lags; ++i) {
        double emp = (corr_x[static_cast<size_t>(i)] / static_cast<double>(realizations)).real();
        double ana = spatial_correlation(model, positions[static_cast<size_t>(i)].x);
        se += (emp - ana) * (emp - ana);
    }
    report.spatial_rmse = std::sqrt(se / n_lags);
    report.spatial_pass = report.spatial_rmse < 0.05;

    // Frequency correlation magnitude over theta = tau_max * df in [0, 20].
    const int n_thetas = 21;
    std::vector<double> freqs(static_cast<size_t>(n_thetas));
    for (int j = 0; j < n_thetas; ++j)
        freqs[static_cast<size_t>(j)] = 20.0 * static_cast<double>(j) / (n_thetas - 1) / model.tau_max;
    std::vector<Vec2> origin{{0.0, 0.0}};
    std::vector<std::complex<double>> corr_f(static_cast<size_t>(n_thetas), {0.0, 0.0});
    for (int r = 0; r < realizations; ++r) {
        auto h = wssus_sample_field(model, origin, freqs, convention,
                                    mix_seed(seed, "cf_" + std::to_string(r)));
        for (int j = 0; j < n_thetas; ++j)
            corr_f[static_cast<size_t>(j)] += h[0][static_cast<size_t>(j)] * std::conj(h[0][0]);
    }
    se = 0.0;
    for (int j = 0; j < n_thetas; ++j) {
        double emp = std::abs(corr_f[static_cast<size_t>(j)] / static_cast<double>(realizations));
        double ana = std::abs(frequency_correlation(model, freqs[static_cast<size_t>(j)], convention));
        se += (emp - ana) * (emp - ana);
    }
    report.frequency_rmse = std::sqrt(se / n_thetas);
    report.frequency_pass = report.frequency_rmse < 0.05;

    // |h|^2 against Exp(1): one field draw per sample.
    std::vector<double> power;
    power.reserve(static_cast<size_t>(power_samples));
    for (int r = 0; r < power_samples; ++r) {
        auto h = wssus_sample_field(model, origin, f0, convention,
                                    mix_seed(seed, "exp_" + std::to_string(r)));
        power.push_back(std::norm(h[0][0]));
    }
    std::sort(power.begin(), power.end());
    report.q001 = power[static_cast<size_t>(std::ceil(0.01 * static_cast<double>(power.size()))) - 1];
    double ks = 0.0;
    const double n = static_cast<double>(power.size());
    for (size_t i = 0; i < power.size(); ++i) {
        double cdf = 1.0 - std::exp(-power[i]);
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - cdf));
        ks = std::max(ks, std::abs(static_cast<double>(i) / n - cdf));
    }
    report.ks_exponential = ks;
    report.exponential_pass = ks < 0.02;
    return report;
}

FreqProxyReport validate_freq_proxy(const ExperimentConfig& cfg) {
    Seeds seeds = Seeds::from_master(cfg.seed);
    Scene base = cfg.scene ? *cfg.scene : synthetic_campus(seeds.scene);
    base.validate();
    TwinPair pair = generate_twin_pair(base, cfg.perturb, seeds.twin);

    FreqProxyReport report;
    std::vector<double> gaps, ks;
    for (int id = 0; id < static_cast<int>(base.tx_positions.size()); ++id) {
        FreqProxyRow row;
        row.tx_id = id;
        try {
            row.report = compare_freq_vs_space(pair.truth, id, cfg.max_order);
            gaps.push_back(row.report.quantile_gap_db);
            ks.push_back(row.report.ks_distance);
        } catch (const StatsError&) {
            row.blocked = true;
        }
        report.rows.push_back(row);
    }
    if (!gaps.empty()) {
        report.median_gap_db = median(gaps);
        report.median_ks = median(ks);
    }
    return report;
}

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::ordered_json j;
    j["config"] = {{"epsilon", report.epsilon},
                   {"delta", report.delta},
                   {"train_count", report.train_count},
                   {"max_order", report.max_order},
                   {"snr_scale", report.snr_scale}};
    j["seeds"] = {{"scene", report.seeds.scene},
                  {"twin", report.seeds.twin},
                  {"train_split", report.seeds.train_split},
                  {"gp", report.seeds.gp}};
    j["total_tx"] = report.total_tx;
    j["train_positions"] = report.train_count;
    j["test_positions"] = static_cast<int>(report.records.size()) - report.train_count;
    j["excluded_blocked"] = report.excluded_blocked;
    j["aggregates"] = {{"median_err_direct_db", report.aggregates.median_err_direct_db},
                       {"median_err_spatial_db", report.aggregates.median_err_spatial_db},
                       {"median_err_dt_db", report.aggregates.median_err_dt_db},
                       {"mean_nr_spatial", report.aggregates.mean_nr_spatial},
                       {"mean_nr_dt", report.aggregates.mean_nr_dt},
                       {"meta_spatial", report.aggregates.meta_spatial},
                       {"meta_dt", report.aggregates.meta_dt}};
    return j.dump(2) + "\n";
}

std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "tx_id,x,y,q_truth,q_direct,q_spatial,q_dt,err_direct_db,err_spatial_db,err_dt_db,"
           "rate_spatial,rate_dt,r_eps,nr_spatial,nr_dt,viol_spatial,viol_dt,is_train\n";
    for (const auto& r : report.records) {
        out << r.tx_id << ',' << fmt_double(r.position.x) << ',' << fmt_double(r.position.y) << ','
            << fmt_double(r.q_truth) << ',' << fmt_double(r.q_direct) << ',' << fmt_double(r.q_spatial) << ','
            << fmt_double(r.q_dt) << ',' << fmt_double(r.err_direct_db) << ',' << fmt_double(r.err_spatial_db)
            << ',' << fmt_double(r.err_dt_db) << ',' << fmt_double(r.rate_spatial) << ','
            << fmt_double(r.rate_dt) << ',' << fmt_double(r.r_eps) << ',' << fmt_double(r.nr_spatial) << ','
            << fmt_double(r.nr_dt) << ',' << (r.viol_spatial ? 1 : 0) << ',' << (r.viol_dt ? 1 : 0) << ','
            << (r.is_train ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string paths_to_csv(const std::vector<std::pair<int, PathSet>>& path_sets) {
    std::ostringstream out;
    out << "tx_id,order,delay_s,re_amp,im_amp\n";
    for (const auto& [id, ps] : path_sets) {
        for (const auto& p : ps.paths)
            out << id << ',' << p.order << ',' << fmt_double(p.delay) << ',' << fmt_double(p.amplitude.real())
                << ',' << fmt_double(p.amplitude.imag()) << '\n';
    }
    return out.str();
}

std::string cdf_to_csv(const EmpiricalCdf& cdf) {
    std::ostringstream out;
    out << "power_db,cdf\n";
    const auto& s = cdf.samples();
    for (size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) continue;
        out << fmt_double(10.0 * std::log10(s[i])) << ','
            << fmt_double(static_cast<double>(i + 1) / static_cast<double>(s.size())) << '\n';
    }
    return out.str();
}

}  // namespace fadetwin
