// vadiff: command-line front end.
//
//   vadiff gen-synth --out DIR [--informative] [--domain-shift S] [--seed N]
//   vadiff extract-motion --frames DIR --out DIR [--kind star|dynamic] [--condition-dim C]
//   vadiff train --config run.cfg --out DIR [--set key=value]... [--key value]...
//   vadiff score --config run.cfg --checkpoint C --stats S --out scores.csv
//   vadiff eval --scores scores.csv --manifest test.json --out report.json
//   vadiff sweep --config run.cfg --p-mean -1.2,-2 --p-std 1.2 --start-t 1,2,4 --out DIR
//   vadiff cross-eval --config run.cfg --checkpoint C --stats S --manifest B.json --out DIR
//   vadiff report --out DIR report.json sweep.csv ...

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"
#include "vad/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
    std::string file;
    std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.file, "key = value configuration file");
    cmd->add_option("--set", args.sets, "override, key=value (repeatable)");
    cmd->allow_extras();  // --dotted.key value
}

vad::RunConfig resolve_config(const CLI::App* cmd, const ConfigArgs& args) {
    vad::KeyValues overrides;
    for (const auto& s : args.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw vad::ConfigError("--set expects key=value, got '" + s + "'");
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    const auto extras = cmd->remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const auto& tok = extras[i];
        if (tok.rfind("--", 0) != 0) throw vad::ConfigError("unexpected argument '" + tok + "'");
        auto key = tok.substr(2);
        if (const auto eq = key.find('='); eq != std::string::npos) {
            overrides[key.substr(0, eq)] = key.substr(eq + 1);
        } else {
            if (i + 1 >= extras.size()) throw vad::ConfigError("missing value for --" + key);
            overrides[key] = extras[++i];
        }
    }
    return vad::load_config(args.file, overrides);
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T v;
        if (!(is >> v) || !is.eof()) throw vad::ConfigError("bad list item '" + item + "'");
        out.push_back(v);
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Conditioned diffusion video anomaly detection"};
    app.require_subcommand(1);

    // gen-synth
    auto* synth = app.add_subcommand("gen-synth", "write a synthetic train/test pair");
    vad::SyntheticSpec spec;
    std::string synth_out, spec_file;
    synth->add_option("--out", synth_out)->required();
    synth->add_option("--spec", spec_file, "JSON spec; flags below override it");
    auto* o_f = synth->add_option("--feature-dim", spec.feature_dim);
    auto* o_c = synth->add_option("--condition-dim", spec.condition_dim);
    auto* o_d = synth->add_option("--latent-dim", spec.latent_dim);
    auto* o_nn = synth->add_option("--n-normal", spec.n_normal);
    auto* o_na = synth->add_option("--n-anomalous", spec.n_anomalous);
    auto* o_nt = synth->add_option("--n-test", spec.n_test);
    auto* o_off = synth->add_option("--offset", spec.anomaly_offset_magnitude);
    auto* o_on = synth->add_option("--obs-noise", spec.observation_noise_std);
    auto* o_cn = synth->add_option("--cond-noise", spec.condition_noise_std);
    auto* o_inf = synth->add_flag("--informative", spec.condition_informative);
    auto* o_ds = synth->add_option("--domain-shift", spec.domain_shift);
    auto* o_cpv = synth->add_option("--clips-per-video", spec.clips_per_video);
    auto* o_seed = synth->add_option("--seed", spec.seed);

    // extract-motion
    auto* extract = app.add_subcommand("extract-motion", "motion images from 16-frame windows");
    std::string frames_root, extract_out, kind = "star";
    vad::ExtractOptions extract_opts;
    extract->add_option("--frames", frames_root, "directory of videos (PPM frame dirs or .vadc)")->required();
    extract->add_option("--out", extract_out)->required();
    extract->add_option("--kind", kind)->check(CLI::IsMember({"star", "dynamic"}));
    extract->add_option("--condition-dim", extract_opts.condition_dim, "also write toy-encoder conditions");
    extract->add_flag("--raw", extract_opts.write_raw, "also write unnormalized .vadm images");

    // train
    auto* train = app.add_subcommand("train", "train the denoiser");
    ConfigArgs train_cfg;
    std::string train_out;
    add_config_options(train, train_cfg);
    train->add_option("--out", train_out)->required();

    // score
    auto* score = app.add_subcommand("score", "reconstruction errors for every clip");
    ConfigArgs score_cfg;
    std::string ckpt, stats, manifest, score_out;
    bool identity = false;
    add_config_options(score, score_cfg);
    score->add_option("--checkpoint", ckpt);
    score->add_option("--stats", stats)->required();
    score->add_option("--manifest", manifest, "defaults to data.test_manifest");
    score->add_option("--out", score_out)->required();
    score->add_flag("--identity", identity, "score with the identity denoiser (test hook)");

    // eval
    auto* eval = app.add_subcommand("eval", "frame-level AUC report");
    ConfigArgs eval_cfg;
    std::string scores_csv, eval_manifest, eval_out, roc_out;
    std::uint64_t permute_seed = 0;
    bool invert = false;
    add_config_options(eval, eval_cfg);
    eval->add_option("--scores", scores_csv)->required();
    eval->add_option("--manifest", eval_manifest, "defaults to data.test_manifest");
    eval->add_option("--out", eval_out, "report JSON (stdout when omitted)");
    eval->add_option("--roc", roc_out, "ROC curve table");
    eval->add_flag("--invert-labels", invert);
    auto* o_perm = eval->add_option("--permute-labels", permute_seed, "permutation control with this seed");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "grid over training noise and start index");
    ConfigArgs sweep_cfg;
    std::string p_mean = "-1.2", p_std = "1.2", start_t = "1,2,3,4,5,6,7,8,9", sweep_out;
    add_config_options(sweep, sweep_cfg);
    sweep->add_option("--p-mean", p_mean, "comma-separated");
    sweep->add_option("--p-std", p_std, "comma-separated");
    sweep->add_option("--start-t", start_t, "comma-separated");
    sweep->add_option("--out", sweep_out)->required();

    // cross-eval
    auto* cross = app.add_subcommand("cross-eval", "score domain B with a domain-A model");
    ConfigArgs cross_cfg;
    std::string cross_ckpt, cross_stats, cross_manifest, cross_out;
    add_config_options(cross, cross_cfg);
    cross->add_option("--checkpoint", cross_ckpt)->required();
    cross->add_option("--stats", cross_stats, "domain-A standardization stats")->required();
    cross->add_option("--manifest", cross_manifest, "domain-B manifest")->required();
    cross->add_option("--out", cross_out)->required();

    // report
    auto* report = app.add_subcommand("report", "render reports and sweep tables");
    std::vector<std::string> report_inputs;
    std::string report_out;
    report->add_option("inputs", report_inputs, "report JSON, sweep.csv or ROC tables")->required();
    report->add_option("--out", report_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (synth->parsed()) {
        vad::SyntheticSpec base;
        if (!spec_file.empty()) base = vad::synthetic_spec_from_json(vad::io::read_text(spec_file));
        const auto take = [](CLI::Option* opt, auto& dst, const auto& src) {
            if (opt->count() > 0) dst = src;
        };
        take(o_f, base.feature_dim, spec.feature_dim);
        take(o_c, base.condition_dim, spec.condition_dim);
        take(o_d, base.latent_dim, spec.latent_dim);
        take(o_nn, base.n_normal, spec.n_normal);
        take(o_na, base.n_anomalous, spec.n_anomalous);
        take(o_nt, base.n_test, spec.n_test);
        take(o_off, base.anomaly_offset_magnitude, spec.anomaly_offset_magnitude);
        take(o_on, base.observation_noise_std, spec.observation_noise_std);
        take(o_cn, base.condition_noise_std, spec.condition_noise_std);
        take(o_inf, base.condition_informative, spec.condition_informative);
        take(o_ds, base.domain_shift, spec.domain_shift);
        take(o_cpv, base.clips_per_video, spec.clips_per_video);
        take(o_seed, base.seed, spec.seed);
        const auto paths = vad::write_synthetic(vad::generate_synthetic(base), synth_out);
        std::cout << "train manifest: " << paths.train_manifest.string() << '\n'
                  << "test manifest:  " << paths.test_manifest.string() << '\n';
    } else if (extract->parsed()) {
        extract_opts.kind = vad::parse_motion_kind(kind);
        const auto summary = vad::cmd_extract_motion(frames_root, extract_out, extract_opts);
        for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << summary.images << " motion images from " << summary.videos << " videos\n";
    } else if (train->parsed()) {
        const auto cfg = resolve_config(train, train_cfg);
        const auto r = vad::cmd_train(cfg, train_out);
        vad::io::write_text(fs::path(train_out) / "run.cfg", vad::to_config_text(cfg));
        std::cout << "trained " << r.steps << " steps";
        if (!r.epoch_loss.empty()) std::cout << ", final epoch loss " << r.epoch_loss.back();
        std::cout << "\ncheckpoint: " << r.checkpoint.string() << '\n';
    } else if (score->parsed()) {
        const auto cfg = resolve_config(score, score_cfg);
        if (manifest.empty()) manifest = cfg.test_manifest;
        if (manifest.empty()) throw vad::ConfigError("no manifest: pass --manifest or set data.test_manifest");
        if (identity) {
            const auto st = vad::read_training_stats(stats);
            ckpt = score_out + ".identity.vadw";
            vad::write_identity_checkpoint(ckpt, st.input.dim(), st.condition ? st.condition->dim() : 0);
        }
        if (ckpt.empty()) throw vad::ConfigError("--checkpoint is required unless --identity is given");
        const auto r = vad::cmd_score(ckpt, stats, manifest, cfg, score_out);
        std::cout << r.records.size() << " clips scored in " << r.batches.size() << " threshold batches\n";
    } else if (eval->parsed()) {
        const auto cfg = resolve_config(eval, eval_cfg);
        if (eval_manifest.empty()) eval_manifest = cfg.test_manifest;
        if (eval_manifest.empty()) throw vad::ConfigError("no manifest: pass --manifest or set data.test_manifest");
        auto options = vad::eval_options(cfg);
        options.invert_labels = invert;
        if (o_perm->count() > 0) options.permute_labels_seed = permute_seed;
        if (!roc_out.empty()) options.roc_csv = roc_out;
        const auto text = vad::report_to_json(vad::cmd_eval(scores_csv, eval_manifest, options));
        if (eval_out.empty()) {
            std::cout << text << '\n';
        } else {
            vad::io::write_text(eval_out, text);
        }
    } else if (sweep->parsed()) {
        const auto cfg = resolve_config(sweep, sweep_cfg);
        vad::SweepGrid grid{parse_list<double>(p_mean), parse_list<double>(p_std), parse_list<std::size_t>(start_t)};
        const auto cells = vad::cmd_sweep(cfg, grid, sweep_out);
        for (const auto& c : cells) {
            std::cout << "p_mean=" << c.p_mean << " p_std=" << c.p_std << " start_t=" << c.start_t << " auc=" << c.auc << '\n';
        }
    } else if (cross->parsed()) {
        const auto cfg = resolve_config(cross, cross_cfg);
        const auto r = vad::cmd_cross_eval(cross_ckpt, cross_stats, cross_manifest, cfg, cross_out);
        std::cout << "cross-domain frame AUC " << r.frame_auc << '\n';
    } else if (report->parsed()) {
        std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
        for (const auto& p : vad::cmd_report(inputs, report_out)) std::cout << p.string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const vad::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return vad::exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
