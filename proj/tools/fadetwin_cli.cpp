#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fadetwin/harness.hpp"
#include "fadetwin/rng.hpp"

namespace fs = std::filesystem;
using namespace fadetwin;

namespace {

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scene file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str());
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

struct CommonOpts {
    std::string scene_file;
    std::uint64_t seed = 0;
    double epsilon = 0.01;
    double delta = 0.10;
    int train_count = 30;
    int max_order = 2;
    int reps = 1;
    std::string out_dir = "out";
    std::string convention = "paper";
};

ExperimentConfig make_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.scene_file.empty()) cfg.scene = load_scene(opts.scene_file);
    cfg.seed = opts.seed;
    cfg.epsilon = opts.epsilon;
    cfg.delta = opts.delta;
    cfg.train_count = opts.train_count;
    cfg.max_order = opts.max_order;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fadetwin: channel statistics prediction from uncalibrated ray-traced twins"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.add_option("--seed", opts.seed, "master seed; all randomness derives from it");

    auto add_common = [&](CLI::App* sub, bool with_experiment_flags) {
        sub->add_option("--scene", opts.scene_file, "scene file (default: builtin campus)");
        sub->add_option("--seed", opts.seed, "master seed");
        sub->add_option("--max-order", opts.max_order, "max reflection order")->check(CLI::Range(0, 3));
        sub->add_option("--out-dir", opts.out_dir, "output directory");
        if (with_experiment_flags) {
            sub->add_option("--epsilon", opts.epsilon, "outage target");
            sub->add_option("--delta", opts.delta, "rate-selection confidence");
            sub->add_option("--train-count", opts.train_count, "training positions D");
            sub->add_option("--reps", opts.reps, "repetitions")->check(CLI::PositiveNumber);
        }
    };

    auto* gen = app.add_subcommand("gen-scene", "write the builtin campus scene to a file");
    std::string gen_out = "campus.scene";
    gen->add_option("--seed", opts.seed, "master seed");
    gen->add_option("--out", gen_out, "output scene file");

    auto* trace_cmd = app.add_subcommand("trace", "trace one tx and print the path CSV");
    int trace_tx = 0;
    add_common(trace_cmd, false);
    trace_cmd->add_option("--tx-id", trace_tx, "transmitter id");

    auto* stats_cmd = app.add_subcommand("stats", "per-tx CDF and quantile CSVs");
    add_common(stats_cmd, true);

    auto* exp_cmd = app.add_subcommand("experiment", "full prediction + rate-selection experiment");
    add_common(exp_cmd, true);

    auto* vw_cmd = app.add_subcommand("validate-wssus", "Monte-Carlo checks of the WSSUS model");
    vw_cmd->add_option("--seed", opts.seed, "master seed");
    vw_cmd->add_option("--convention", opts.convention, "phase convention")
        ->check(CLI::IsMember({"paper", "physical"}));

    auto* vp_cmd = app.add_subcommand("validate-proxy", "frequency-vs-space CDF comparison per tx");
    add_common(vp_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            Scene scene = synthetic_campus(Seeds::from_master(opts.seed).scene);
            write_file(gen_out, serialize_scene(scene));
            std::cout << "wrote " << gen_out << " (" << scene.tx_positions.size() << " tx positions)\n";
        } else if (trace_cmd->parsed()) {
            Scene scene = opts.scene_file.empty() ? synthetic_campus(Seeds::from_master(opts.seed).scene)
                                                  : load_scene(opts.scene_file);
            if (trace_tx < 0 || trace_tx >= static_cast<int>(scene.tx_positions.size()))
                throw ConfigError("tx id out of range");
            PathSet ps = trace(scene, scene.tx_positions[static_cast<size_t>(trace_tx)], opts.max_order);
            std::cout << paths_to_csv({{trace_tx, ps}});
        } else if (stats_cmd->parsed()) {
            Scene scene = opts.scene_file.empty() ? synthetic_campus(Seeds::from_master(opts.seed).scene)
                                                  : load_scene(opts.scene_file);
            std::ostringstream quantiles;
            quantiles << "tx_id,rho,q\n";
            for (size_t id = 0; id < scene.tx_positions.size(); ++id) {
                EmpiricalCdf cdf(power_samples(scene, scene.tx_positions[id], opts.max_order));
                write_file(fs::path(opts.out_dir) / ("cdf_" + std::to_string(id) + ".csv"), cdf_to_csv(cdf));
                double rho = empirical_quantile(cdf, opts.epsilon);
                quantiles << id << ',' << rho << ',' << (rho > 0.0 ? std::log(rho) : -1.0 / 0.0) << '\n';
            }
            write_file(fs::path(opts.out_dir) / "quantiles.csv", quantiles.str());
            std::cout << "wrote CDFs for " << scene.tx_positions.size() << " tx to " << opts.out_dir << "\n";
        } else if (exp_cmd->parsed()) {
            ExperimentConfig cfg = make_config(opts);
            nlohmann::ordered_json summary = nlohmann::ordered_json::array();
            for (int r = 0; r < opts.reps; ++r) {
                ExperimentConfig rep_cfg = cfg;
                rep_cfg.seed = r == 0 ? cfg.seed : mix_seed(cfg.seed, "rep_" + std::to_string(r));
                ExperimentReport report = run_experiment(rep_cfg);
                fs::path dir = opts.reps == 1 ? fs::path(opts.out_dir)
                                              : fs::path(opts.out_dir) / ("rep_" + std::to_string(r));
                write_file(dir / "report.json", report_to_json(report));
                write_file(dir / "positions.csv", report_to_csv(report));
                summary.push_back({{"rep", r},
                                   {"median_err_direct_db", report.aggregates.median_err_direct_db},
                                   {"median_err_spatial_db", report.aggregates.median_err_spatial_db},
                                   {"median_err_dt_db", report.aggregates.median_err_dt_db},
                                   {"mean_nr_spatial", report.aggregates.mean_nr_spatial},
                                   {"mean_nr_dt", report.aggregates.mean_nr_dt},
                                   {"meta_spatial", report.aggregates.meta_spatial},
                                   {"meta_dt", report.aggregates.meta_dt}});
            }
            if (opts.reps > 1)
                write_file(fs::path(opts.out_dir) / "summary.json", summary.dump(2) + "\n");
            std::cout << summary.dump(2) << "\n";
        } else if (vw_cmd->parsed()) {
            PhaseConvention conv =
                opts.convention == "physical" ? PhaseConvention::physical : PhaseConvention::paper;
            WssusValidationReport r = validate_wssus(opts.seed, 200, 10000, 100000, conv);
            nlohmann::ordered_json j{{"spatial_rmse", r.spatial_rmse},
                                     {"spatial_pass", r.spatial_pass},
                                     {"frequency_rmse", r.frequency_rmse},
                                     {"frequency_pass", r.frequency_pass},
                                     {"ks_exponential", r.ks_exponential},
                                     {"exponential_pass", r.exponential_pass}};
            std::cout << j.dump(2) << "\n";
            if (!r.spatial_pass || !r.frequency_pass || !r.exponential_pass) return 2;
        } else if (vp_cmd->parsed()) {
            ExperimentConfig cfg = make_config(opts);
            FreqProxyReport report = validate_freq_proxy(cfg);
            std::ostringstream csv;
            csv << "tx_id,blocked,ks_distance,quantile_gap_db\n";
            for (const auto& row : report.rows)
                csv << row.tx_id << ',' << (row.blocked ? 1 : 0) << ',' << row.report.ks_distance << ','
                    << row.report.quantile_gap_db << '\n';
            write_file(fs::path(opts.out_dir) / "freq_proxy.csv", csv.str());
            nlohmann::ordered_json j{{"median_gap_db", report.median_gap_db}, {"median_ks", report.median_ks}};
            std::cout << j.dump(2) << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
