#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fadetwin/chanstats.hpp"
#include "fadetwin/gpredict.hpp"
#include "fadetwin/ratesel.hpp"
#include "fadetwin/raytwin.hpp"
#include "fadetwin/scene.hpp"

namespace fadetwin {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Seeds {
    std::uint64_t scene = 0;
    std::uint64_t twin = 0;
    std::uint64_t train_split = 0;
    std::uint64_t gp = 0;

    static Seeds from_master(std::uint64_t master);
};

struct ExperimentConfig {
    std::optional<Scene> scene;  // unset -> builtin campus from the scene seed
    std::uint64_t seed = 0;      // master seed; named sub-seeds derive from it
    PerturbationSpec perturb;
    double epsilon = 0.01;
    double delta = 0.10;
    int train_count = 30;
    int max_order = 2;
    double snr_scale = 0.0;  // P_tx / sigma_n^2; <= 0 selects the default
                             // (median LOS SNR of 60 dB at 50 m)
    FitOptions gp_options;
};

struct PositionRecord {
    int tx_id = 0;
    Vec2 position;
    double q_truth = 0.0;
    double q_direct = 0.0;
    double q_spatial = 0.0;
    double q_dt = 0.0;
    double err_direct_db = 0.0;
    double err_spatial_db = 0.0;
    double err_dt_db = 0.0;
    double rate_spatial = 0.0;
    double rate_dt = 0.0;
    double r_eps = 0.0;
    double nr_spatial = 0.0;
    double nr_dt = 0.0;
    bool viol_spatial = false;
    bool viol_dt = false;
    bool is_train = false;
};

struct Aggregates {
    double median_err_direct_db = 0.0;
    double median_err_spatial_db = 0.0;
    double median_err_dt_db = 0.0;
    double mean_nr_spatial = 0.0;
    double mean_nr_dt = 0.0;
    double meta_spatial = 0.0;
    double meta_dt = 0.0;
};

struct ExperimentReport {
    Seeds seeds;
    double epsilon = 0.0;
    double delta = 0.0;
    int train_count = 0;
    int max_order = 0;
    double snr_scale = 0.0;
    std::vector<PositionRecord> records;  // sorted by tx id, eligible only
    std::vector<int> excluded_blocked;    // blocked tx ids
    int total_tx = 0;
    Aggregates aggregates;  // over test (non-train) records
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Default end-to-end SNR scaling for a band: median LOS SNR of 60 dB at 50 m.
double default_snr_scale(const Band& band);

struct WssusValidationReport {
    double spatial_rmse = 0.0;     // empirical c_x vs J0 over [0, 3 lambda]
    double frequency_rmse = 0.0;   // empirical |c_f| vs analytic over theta in [0, 20]
    double ks_exponential = 0.0;   // KS(|h|^2, Exp(1))
    double q001 = 0.0;             // empirical 0.01-quantile of |h|^2
    bool spatial_pass = false;
    bool frequency_pass = false;
    bool exponential_pass = false;
};

WssusValidationReport validate_wssus(std::uint64_t seed, int n_waves = 200, int realizations = 10000,
                                     int power_samples = 100000,
                                     PhaseConvention convention = PhaseConvention::paper);

struct FreqProxyRow {
    int tx_id = 0;
    bool blocked = false;
    FreqSpaceReport report;
};

struct FreqProxyReport {
    std::vector<FreqProxyRow> rows;  // one per tx position
    double median_gap_db = 0.0;      // over non-blocked positions
    double median_ks = 0.0;
};

// Runs compare_freq_vs_space at every tx of the truth twin built from cfg.
FreqProxyReport validate_freq_proxy(const ExperimentConfig& cfg);

// Report serialization: JSON with stable key order, CSV per position.
std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);
std::string paths_to_csv(const std::vector<std::pair<int, PathSet>>& path_sets);
std::string cdf_to_csv(const EmpiricalCdf& cdf);

double median(std::vector<double> values);

}  // namespace fadetwin
