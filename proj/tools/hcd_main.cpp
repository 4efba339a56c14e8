#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hcd/affinity.hpp"
#include "hcd/detection.hpp"
#include "hcd/io.hpp"
#include "hcd/regression.hpp"
#include "hcd/selection.hpp"
#include "hcd/synth.hpp"
#include "hcd/toml.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

hcd::SynthConfig synth_config_from_toml(const hcd::toml::Table& t) {
    hcd::SynthConfig cfg;
    cfg.n1 = int(t.get_int("synth", "n1", cfg.n1));
    cfg.n2 = int(t.get_int("synth", "n2", cfg.n2));
    cfg.channels_x = int(t.get_int("synth", "channels_x", cfg.channels_x));
    cfg.channels_y = int(t.get_int("synth", "channels_y", cfg.channels_y));
    cfg.rng_seed = std::uint64_t(t.get_int("synth", "rng_seed", 0));
    cfg.num_change_regions = int(t.get_int("synth", "num_change_regions", cfg.num_change_regions));
    cfg.change_area_fraction =
        t.get_double("synth", "change_area_fraction", cfg.change_area_fraction);
    cfg.base_texture =
        hcd::base_texture_from_string(t.get_string("synth", "base_texture", "smooth-gradient"));
    cfg.noise_sigma_x = t.get_double("synth", "noise_sigma_x", cfg.noise_sigma_x);
    cfg.noise_sigma_y = t.get_double("synth", "noise_sigma_y", cfg.noise_sigma_y);
    cfg.cross_map = hcd::cross_map_from_string(t.get_string("synth", "cross_map", "linear"));
    return cfg;
}

hcd::RegressorConfig regressor_config_from_toml(const hcd::toml::Table& t) {
    hcd::RegressorConfig cfg;
    cfg.kind = hcd::regressor_kind_from_string(t.get_string("regressor", "method", "rfr"));
    cfg.memory_cap = std::size_t(t.get_int("regressor", "memory_cap", 20000));
    cfg.gpr.signal_variance = t.get_double("regressor", "gpr_signal_variance", 1.0);
    cfg.gpr.length_scale = t.get_double("regressor", "gpr_length_scale", 1.0);
    cfg.gpr.jitter = t.get_double("regressor", "gpr_jitter", 1e-6);
    cfg.gpr.optimizer_steps = int(t.get_int("regressor", "gpr_optimizer_steps", 1));
    cfg.svr.lambda = t.get_double("regressor", "svr_lambda", 1.0);
    cfg.svr.epsilon = t.get_double("regressor", "svr_epsilon", 0.1);
    cfg.svr.rbf_width = t.get_double("regressor", "svr_rbf_width", 1.0);
    cfg.svr.max_iterations = int(t.get_int("regressor", "svr_max_iterations", 500));
    cfg.rfr.num_trees = int(t.get_int("regressor", "rfr_num_trees", 64));
    cfg.rfr.features_per_node = int(t.get_int("regressor", "rfr_features_per_node", 0));
    cfg.rfr.min_leaf_size = int(t.get_int("regressor", "rfr_min_leaf_size", 1));
    cfg.rfr.bootstrap = t.get_bool("regressor", "rfr_bootstrap", true);
    cfg.rfr.rng_seed = std::uint64_t(t.get_int("regressor", "rfr_rng_seed",
                                               t.get_int("run", "rng_seed", 0)));
    cfg.hpt.num_neighbors = int(t.get_int("regressor", "hpt_num_neighbors", 50));
    cfg.hpt.kernel_decay = t.get_double("regressor", "hpt_kernel_decay", 100.0);
    cfg.hpt.normalization =
        t.get_string("regressor", "hpt_normalization", "absolute") == "relative"
            ? hcd::HptConfig::Normalization::relative
            : hcd::HptConfig::Normalization::absolute;
    return cfg;
}

json metrics_to_json(const hcd::MetricsReport& m) {
    json j;
    if (m.auc) j["auc"] = *m.auc;
    else j["auc"] = nullptr;
    j["oa"] = m.oa;
    if (m.kappa) j["kappa"] = *m.kappa;
    else j["kappa"] = nullptr;
    j["tp"] = m.confusion.tp;
    j["tn"] = m.confusion.tn;
    j["fp"] = m.confusion.fp;
    j["fn"] = m.confusion.fn;
    j["threshold"] = m.threshold_used;
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

struct RegressorFlags {
    std::string method = "rfr";
    std::size_t memory_cap = 20000;
    double gpr_signal_variance = 1.0, gpr_length_scale = 1.0, gpr_jitter = 1e-6;
    int gpr_optimizer_steps = 1;
    double svr_lambda = 1.0, svr_epsilon = 0.1, svr_rbf_width = 1.0;
    int svr_max_iterations = 500;
    int rfr_num_trees = 64, rfr_features_per_node = 0, rfr_min_leaf_size = 1;
    bool rfr_no_bootstrap = false;
    std::uint64_t rfr_seed = 0;
    int hpt_num_neighbors = 50;
    double hpt_kernel_decay = 100.0;
    std::string hpt_normalization = "absolute";

    void attach(CLI::App* cmd) {
        cmd->add_option("--method", method, "gpr | svr | rfr | hpt")->required();
        cmd->add_option("--memory-cap", memory_cap, "kernel-method training size cap");
        cmd->add_option("--gpr-signal-variance", gpr_signal_variance);
        cmd->add_option("--gpr-length-scale", gpr_length_scale);
        cmd->add_option("--gpr-jitter", gpr_jitter);
        cmd->add_option("--gpr-optimizer-steps", gpr_optimizer_steps);
        cmd->add_option("--svr-lambda", svr_lambda);
        cmd->add_option("--svr-epsilon", svr_epsilon);
        cmd->add_option("--svr-rbf-width", svr_rbf_width);
        cmd->add_option("--svr-max-iterations", svr_max_iterations);
        cmd->add_option("--rfr-num-trees", rfr_num_trees);
        cmd->add_option("--rfr-features-per-node", rfr_features_per_node);
        cmd->add_option("--rfr-min-leaf-size", rfr_min_leaf_size);
        cmd->add_flag("--rfr-no-bootstrap", rfr_no_bootstrap);
        cmd->add_option("--rfr-seed", rfr_seed);
        cmd->add_option("--hpt-num-neighbors", hpt_num_neighbors);
        cmd->add_option("--hpt-kernel-decay", hpt_kernel_decay);
        cmd->add_option("--hpt-normalization", hpt_normalization, "absolute | relative");
    }

    hcd::RegressorConfig to_config() const {
        hcd::RegressorConfig cfg;
        cfg.kind = hcd::regressor_kind_from_string(method);
        cfg.memory_cap = memory_cap;
        cfg.gpr = {gpr_signal_variance, gpr_length_scale, gpr_jitter, gpr_optimizer_steps};
        cfg.svr = {svr_lambda, svr_epsilon, svr_rbf_width, svr_max_iterations, 1e-8};
        cfg.rfr = {rfr_num_trees, rfr_features_per_node, rfr_min_leaf_size, !rfr_no_bootstrap,
                   rfr_seed};
        cfg.hpt.num_neighbors = hpt_num_neighbors;
        cfg.hpt.kernel_decay = hpt_kernel_decay;
        cfg.hpt.normalization = hpt_normalization == "relative"
                                    ? hcd::HptConfig::Normalization::relative
                                    : hcd::HptConfig::Normalization::absolute;
        return cfg;
    }
};

int run_pipeline(const std::string& config_path) {
    const auto cfg = hcd::toml::Table::parse_file(config_path);
    const std::string out_dir = cfg.get_string("paths", "output_dir", ".");
    fs::create_directories(out_dir);
    json report;

    auto t0 = std::chrono::steady_clock::now();
    const hcd::ImageStack img_x = hcd::read_npy_image(cfg.get_string("paths", "x"));
    const hcd::ImageStack img_y = hcd::read_npy_image(cfg.get_string("paths", "y"));
    report["stage_timings_ms"]["load"] = ms_since(t0);

    hcd::PatchSpec spec{int(cfg.get_int("patch", "k", 10)), int(cfg.get_int("patch", "delta", 1))};

    t0 = std::chrono::steady_clock::now();
    const hcd::ChangeScores pc = hcd::possibility_map(img_x, img_y, spec);
    report["stage_timings_ms"]["prior"] = ms_since(t0);
    hcd::write_npy(out_dir + "/pc.npy", pc);

    std::vector<std::uint8_t> mask;
    bool have_mask = false;
    if (cfg.has("paths", "ground_truth")) {
        int mh = 0, mw = 0;
        mask = hcd::read_npy_mask(cfg.get_string("paths", "ground_truth"), mh, mw);
        if (mh != pc.height || mw != pc.width)
            throw std::runtime_error("ground truth dimensions mismatch");
        have_mask = true;
    }

    t0 = std::chrono::steady_clock::now();
    const auto m = std::size_t(cfg.get_int("run", "m", 1000));
    const int n_bins = int(cfg.get_int("run", "n_bins", 100));
    const double dh_warn = cfg.get_double("run", "d_h_warn_threshold", 0.5);
    const hcd::SelectionReport sel = hcd::select_with_diagnostics(
        pc, img_x, img_y, m, n_bins, have_mask ? &mask : nullptr);
    report["stage_timings_ms"]["select"] = ms_since(t0);
    report["selection"]["d_h_x"] = sel.d_h_x;
    report["selection"]["d_h_y"] = sel.d_h_y;
    if (sel.fn_fraction) report["selection"]["fn_fraction"] = *sel.fn_fraction;
    if (sel.d_h_x > dh_warn || sel.d_h_y > dh_warn)
        std::cerr << "warning: training set may not be representative (d_H = " << sel.d_h_x
                  << ", " << sel.d_h_y << ")\n";
    hcd::write_training_set(out_dir + "/train.bin", sel.training_set);

    t0 = std::chrono::steady_clock::now();
    const hcd::RegressorConfig reg_cfg = regressor_config_from_toml(cfg);
    const hcd::TwoWayPrediction pred =
        hcd::regress_both_ways(img_x, img_y, sel.training_set, reg_cfg);
    report["stage_timings_ms"]["regress"] = ms_since(t0);
    hcd::write_npy(out_dir + "/xhat.npy", pred.x_hat.image);
    hcd::write_npy(out_dir + "/yhat.npy", pred.y_hat.image);

    t0 = std::chrono::steady_clock::now();
    const double num_sigma = cfg.get_double("run", "num_sigma_clip", 4.0);
    const hcd::ChangeScores dx = clip_normalize(distance_image(img_x, pred.x_hat), num_sigma);
    const hcd::ChangeScores dy = clip_normalize(distance_image(img_y, pred.y_hat), num_sigma);
    const hcd::ChangeScores fused = fuse(dx, dy);
    hcd::FilterConfig filter;
    filter.iterations = int(cfg.get_int("filter", "iterations", 5));
    filter.kernel_width = cfg.get_double("filter", "kernel_width", 0.1);
    filter.spatial_radius = int(cfg.get_int("filter", "spatial_radius", 8));
    filter.spatial_sigma = cfg.get_double("filter", "spatial_sigma", 4.0);
    const hcd::ChangeScores filtered = meanfield_filter(fused, img_x, img_y, filter);
    const hcd::ThresholdResult thr = hcd::otsu_threshold(filtered);
    report["stage_timings_ms"]["detect"] = ms_since(t0);
    if (thr.degenerate)
        std::cerr << "warning: constant distance map, threshold undefined; "
                     "reporting all-no-change\n";
    hcd::write_npy(out_dir + "/d.npy", filtered);
    hcd::write_png_mask(out_dir + "/map.png", thr.change_map, filtered.height, filtered.width);

    report["detection"]["threshold"] = thr.threshold;
    if (have_mask) {
        const hcd::MetricsReport metrics = hcd::score(thr.change_map, &filtered, mask,
                                                      thr.threshold);
        report["detection"].update(metrics_to_json(metrics));
        write_json(out_dir + "/metrics.json", metrics_to_json(metrics));
    }
    write_json(out_dir + "/report.json", report);
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised heterogeneous change detection pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic heterogeneous pair");
    std::string synth_config, synth_out = ".";
    synth->add_option("--config", synth_config, "TOML config with a [synth] section")->required();
    synth->add_option("--out", synth_out, "output directory");

    // prior
    auto* prior = app.add_subcommand("prior", "affinity-matrix change possibility map");
    std::string prior_x, prior_y, prior_out = "pc.npy";
    int prior_k = 20, prior_delta = 1;
    prior->add_option("--x", prior_x)->required();
    prior->add_option("--y", prior_y)->required();
    prior->add_option("--k", prior_k, "patch side length");
    prior->add_option("--delta", prior_delta, "patch stride");
    prior->add_option("--out", prior_out);

    // select
    auto* select = app.add_subcommand("select", "self-supervised training set selection");
    std::string sel_pc, sel_x, sel_y, sel_out = "train.bin", sel_report = "sel.json",
                sel_mask;
    std::size_t sel_m = 10000;
    int sel_bins = 100;
    select->add_option("--pc", sel_pc)->required();
    select->add_option("--x", sel_x)->required();
    select->add_option("--y", sel_y)->required();
    select->add_option("--m", sel_m, "training set size");
    select->add_option("--bins", sel_bins, "histogram bins per channel");
    select->add_option("--mask", sel_mask, "optional ground truth for the FN diagnostic");
    select->add_option("--out", sel_out);
    select->add_option("--report", sel_report);

    // regress
    auto* regress = app.add_subcommand("regress", "two-way image regression");
    std::string reg_train, reg_x, reg_y, reg_xhat = "xhat.npy", reg_yhat = "yhat.npy",
                reg_save_model, reg_save_model_back;
    RegressorFlags reg_flags;
    regress->add_option("--train", reg_train)->required();
    regress->add_option("--x", reg_x)->required();
    regress->add_option("--y", reg_y)->required();
    regress->add_option("--out-xhat", reg_xhat);
    regress->add_option("--out-yhat", reg_yhat);
    regress->add_option("--save-model-forward", reg_save_model,
                        "cache the fitted X->Y model blob");
    regress->add_option("--save-model-backward", reg_save_model_back,
                        "cache the fitted Y->X model blob");
    reg_flags.attach(regress);

    // detect
    auto* detect = app.add_subcommand("detect", "distance fusion, filtering, thresholding");
    std::string det_x, det_y, det_xhat, det_yhat, det_out_d = "d.npy", det_out_map = "map.png",
                det_threshold = "otsu";
    int det_iters = 5, det_radius = 8;
    double det_kw = 0.1, det_ssigma = 4.0, det_clip = 4.0;
    detect->add_option("--x", det_x)->required();
    detect->add_option("--y", det_y)->required();
    detect->add_option("--xhat", det_xhat)->required();
    detect->add_option("--yhat", det_yhat)->required();
    detect->add_option("--filter-iters", det_iters);
    detect->add_option("--kernel-width", det_kw);
    detect->add_option("--spatial-radius", det_radius);
    detect->add_option("--spatial-sigma", det_ssigma);
    detect->add_option("--num-sigma-clip", det_clip);
    detect->add_option("--threshold", det_threshold, "otsu (fixed values not supported)");
    detect->add_option("--out-d", det_out_d);
    detect->add_option("--out-map", det_out_map);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score maps against a ground truth mask");
    std::string ev_scores, ev_map, ev_mask, ev_out = "metrics.json";
    evaluate->add_option("--scores", ev_scores, "continuous map (npy) for AUC");
    evaluate->add_option("--map", ev_map, "binary map (png) for OA/kappa");
    evaluate->add_option("--mask", ev_mask)->required();
    evaluate->add_option("--out", ev_out);

    // run
    auto* run = app.add_subcommand("run", "full pipeline from a TOML config");
    std::string run_config;
    run->add_option("--config", run_config)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const auto cfg = synth_config_from_toml(hcd::toml::Table::parse_file(synth_config));
            const hcd::SynthPair pair = hcd::generate_pair(cfg);
            fs::create_directories(synth_out);
            hcd::write_npy(synth_out + "/x.npy", pair.img_x);
            hcd::write_npy(synth_out + "/y.npy", pair.img_y);
            hcd::write_npy_mask(synth_out + "/mask.npy", pair.change_mask, cfg.n1, cfg.n2);
        } else if (prior->parsed()) {
            const auto img_x = hcd::read_npy_image(prior_x);
            const auto img_y = hcd::read_npy_image(prior_y);
            const auto pc = hcd::possibility_map(img_x, img_y, {prior_k, prior_delta});
            hcd::write_npy(prior_out, pc);
        } else if (select->parsed()) {
            const auto pc = hcd::read_npy_scores(sel_pc, hcd::ScoreKind::possibility);
            const auto img_x = hcd::read_npy_image(sel_x);
            const auto img_y = hcd::read_npy_image(sel_y);
            std::vector<std::uint8_t> mask;
            bool have_mask = false;
            if (!sel_mask.empty()) {
                int mh = 0, mw = 0;
                mask = hcd::read_npy_mask(sel_mask, mh, mw);
                have_mask = true;
            }
            const auto report = hcd::select_with_diagnostics(pc, img_x, img_y, sel_m, sel_bins,
                                                             have_mask ? &mask : nullptr);
            hcd::write_training_set(sel_out, report.training_set);
            json j{{"d_h_x", report.d_h_x}, {"d_h_y", report.d_h_y}, {"m", sel_m}};
            if (report.fn_fraction) j["fn_fraction"] = *report.fn_fraction;
            write_json(sel_report, j);
        } else if (regress->parsed()) {
            const auto ts = hcd::read_training_set(reg_train);
            const auto img_x = hcd::read_npy_image(reg_x);
            const auto img_y = hcd::read_npy_image(reg_y);
            const auto pred = hcd::regress_both_ways(img_x, img_y, ts, reg_flags.to_config());
            hcd::write_npy(reg_xhat, pred.x_hat.image);
            hcd::write_npy(reg_yhat, pred.y_hat.image);
            // Model caching: refit is cheap here, but the blobs let later runs
            // skip it entirely.
            if (!reg_save_model.empty() || !reg_save_model_back.empty()) {
                hcd::Matrix xs(ts.size(), ts.dim_x()), ys(ts.size(), ts.dim_y());
                for (std::size_t r = 0; r < ts.size(); ++r) {
                    for (int c = 0; c < ts.dim_x(); ++c) xs(long(r), c) = ts.pairs[r].x[c];
                    for (int c = 0; c < ts.dim_y(); ++c) ys(long(r), c) = ts.pairs[r].y[c];
                }
                if (!reg_save_model.empty()) {
                    std::ofstream os(reg_save_model, std::ios::binary);
                    hcd::save_regressor(*hcd::fit_regressor(reg_flags.to_config(), xs, ys), os);
                }
                if (!reg_save_model_back.empty()) {
                    std::ofstream os(reg_save_model_back, std::ios::binary);
                    hcd::save_regressor(*hcd::fit_regressor(reg_flags.to_config(), ys, xs), os);
                }
            }
        } else if (detect->parsed()) {
            if (det_threshold != "otsu")
                throw std::runtime_error("only --threshold otsu is supported");
            const auto img_x = hcd::read_npy_image(det_x);
            const auto img_y = hcd::read_npy_image(det_y);
            hcd::PredictedImage xhat{hcd::read_npy_image(det_xhat), hcd::RegressorKind::rfr,
                                     "y_to_x"};
            hcd::PredictedImage yhat{hcd::read_npy_image(det_yhat), hcd::RegressorKind::rfr,
                                     "x_to_y"};
            const auto dx = clip_normalize(distance_image(img_x, xhat), det_clip);
            const auto dy = clip_normalize(distance_image(img_y, yhat), det_clip);
            hcd::FilterConfig filter;
            filter.iterations = det_iters;
            filter.kernel_width = det_kw;
            filter.spatial_radius = det_radius;
            filter.spatial_sigma = det_ssigma;
            const auto filtered = meanfield_filter(fuse(dx, dy), img_x, img_y, filter);
            const auto thr = hcd::otsu_threshold(filtered);
            if (thr.degenerate)
                std::cerr << "warning: constant distance map, threshold undefined\n";
            hcd::write_npy(det_out_d, filtered);
            hcd::write_png_mask(det_out_map, thr.change_map, filtered.height, filtered.width);
        } else if (evaluate->parsed()) {
            if (ev_scores.empty() && ev_map.empty())
                throw std::runtime_error("evaluate: need --scores and/or --map");
            int mh = 0, mw = 0;
            const auto mask = hcd::read_npy_mask(ev_mask, mh, mw);
            json j;
            std::optional<hcd::ChangeScores> scores;
            if (!ev_scores.empty()) {
                scores = hcd::read_npy_scores(ev_scores, hcd::ScoreKind::distance);
                if (scores->height != mh || scores->width != mw)
                    throw std::runtime_error("evaluate: scores/mask dimension mismatch");
            }
            if (!ev_map.empty()) {
                int ph = 0, pw = 0;
                const auto map = hcd::read_png_mask(ev_map, ph, pw);
                if (ph != mh || pw != mw)
                    throw std::runtime_error("evaluate: map/mask dimension mismatch");
                const auto metrics =
                    hcd::score(map, scores ? &*scores : nullptr, mask);
                j = metrics_to_json(metrics);
            } else {
                const auto auc = hcd::auc_rank(scores->values, mask);
                j["auc"] = auc ? json(*auc) : json(nullptr);
            }
            write_json(ev_out, j);
            std::cout << j.dump(2) << "\n";
        } else if (run->parsed()) {
            return run_pipeline(run_config);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
