// Command-line front end: dataset synthesis, detector training, patch
// optimization, grid evaluation, and report rendering. Exit codes: 0 on
// success, 1 for bad inputs or configuration, 2 for runtime failures.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advforge/attack.hpp"
#include "advforge/common.hpp"
#include "advforge/config.hpp"
#include "advforge/dataset.hpp"
#include "advforge/detector.hpp"
#include "advforge/evaluation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advforge;

namespace {

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + path);
    f << body;
    if (!f) throw std::runtime_error("write failed: " + path);
}

// Reproducibility stamp: hashes of the exact inputs, no timestamps, so a rerun
// with the same inputs produces an identical file.
void write_run_lock(const std::string& dir, const std::string& subcommand, uint64_t seed,
                    const std::string& config_path, const std::string& checkpoint_path) {
    json j;
    j["schema"] = 1;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["config_hash"] = config_path.empty() ? "" : fnv1a64_file_hex(config_path);
    j["checkpoint_hash"] = checkpoint_path.empty() ? "" : fnv1a64_file_hex(checkpoint_path);
    write_text(dir + "/run.lock", j.dump(2) + "\n");
}

void run_synth(const std::string& out, int count, long long seed, const std::string& profile) {
    data::DatasetConfig cfg;
    if (profile == "full") {
        cfg.frame_size = 640;
        cfg.num_classes = 50;
        cfg.sign_size = 160;
        cfg.ratios = {0.01, 0.1, 0.5, 0.2};
    }
    cfg.count = count;
    cfg.seed = uint64_t(seed);
    std::vector<detect::LabeledFrame> frames = data::synthesize_dataset(cfg);
    fs::create_directories(out);
    data::save_dataset(frames, out);
    std::printf("wrote %d frames (%d classes, %d px) to %s\n", int(frames.size()),
                cfg.num_classes, cfg.frame_size, out.c_str());
}

void run_train(const std::string& data_dir, const std::string& val_dir, const std::string& out,
               int epochs, double lr, long long seed, const std::string& profile, bool verbose) {
    std::vector<detect::LabeledFrame> frames = data::load_dataset(data_dir);
    const detect::DetectorConfig dc =
        profile == "full" ? detect::DetectorConfig::full() : detect::DetectorConfig::toy();
    detect::Detector det = detect::Detector::random_init(dc, uint64_t(seed));
    detect::TrainingConfig tc;
    tc.epochs = epochs;
    tc.lr = lr;
    tc.seed = uint64_t(seed);
    tc.verbose = verbose;
    const detect::TrainingStats stats = detect::train_detector(det, frames, tc);
    fs::create_directories(out);
    const std::string ckpt = out + "/checkpoint.bin";
    det.save(ckpt);
    json j;
    j["schema"] = 1;
    j["kind"] = "training";
    j["epochs"] = stats.epochs_run;
    j["final_loss"] = stats.final_loss;
    j["frames"] = frames.size();
    j["weight_hash"] = det.weight_hash();
    if (!val_dir.empty()) {
        std::vector<detect::LabeledFrame> val = data::load_dataset(val_dir);
        const double map50 = detect::evaluate_map50(det, val);
        j["map50"] = map50;
        std::printf("map50 %.4f over %d validation frames\n", map50, int(val.size()));
    }
    write_text(out + "/summary.json", j.dump(2) + "\n");
    write_run_lock(out, "train-detector", uint64_t(seed), "", ckpt);
    std::printf("checkpoint %s (hash %s, final loss %.4f)\n", ckpt.c_str(),
                det.weight_hash().c_str(), stats.final_loss);
}

void run_gen(const std::string& vec_name, const std::string& config_path, const std::string& out,
             long long seed_flag, int steps_flag, int source_flag, int target_flag,
             const std::string& ckpt_flag, const std::string& bg_flag,
             const std::string& mask_flag) {
    toolkit::RunConfig rc;
    if (!config_path.empty()) {
        rc = toolkit::load_config(config_path, vec_name);
    } else {
        rc.attack = attack::AttackConfig::defaults_for(losses::vector_from_name(vec_name));
        rc.attack.seed = rc.seed;
    }
    if (seed_flag >= 0) {
        rc.seed = uint64_t(seed_flag);
        rc.attack.seed = rc.seed;
    }
    if (steps_flag >= 0) rc.attack.steps = steps_flag;
    if (source_flag >= 0) rc.attack.source_label = source_flag;
    if (target_flag >= 0) rc.attack.target_label = target_flag;
    if (!ckpt_flag.empty()) rc.checkpoint = ckpt_flag;
    if (!bg_flag.empty()) rc.backgrounds = bg_flag;
    if (!mask_flag.empty()) rc.mask_spec = mask_flag;

    const detect::DetectorConfig dc = rc.detector_config();
    rc.attack.validate(dc.num_classes);
    if (rc.checkpoint.empty())
        throw InvalidInput("run.checkpoint is required (set it in the config or via --checkpoint)");
    detect::Detector model = detect::Detector::load(rc.checkpoint);
    if (model.config().input_size != dc.input_size ||
        model.config().num_classes != dc.num_classes)
        throw InvalidInput("checkpoint geometry does not match run.profile " + rc.profile);
    const std::vector<imaging::Image> backgrounds =
        toolkit::load_backgrounds(rc.backgrounds, dc.input_size, rc.seed);
    rc.attack.mask = toolkit::resolve_mask(rc.mask_spec, rc.attack.patch_size);

    const attack::PatchArtifact art = attack::train_patch(rc.attack, model, backgrounds);
    fs::create_directories(out);
    attack::save_artifact(art, out);
    write_run_lock(out, "gen-ae", rc.attack.seed, config_path, rc.checkpoint);
    const double last = art.loss_trace.empty() ? 0.0 : art.loss_trace.back();
    std::printf("%s patch: %d steps, final loss %.6f, masked l2 %.6f -> %s\n",
                losses::vector_name(rc.attack.vector).c_str(), int(art.loss_trace.size()), last,
                art.masked_l2(), out.c_str());
}

void run_eval(const std::string& config_path, const std::string& artifact_dir,
              const std::string& out, const std::string& ckpt_flag, long long seed_flag) {
    toolkit::RunConfig rc;
    if (!config_path.empty()) rc = toolkit::load_config(config_path);
    if (!ckpt_flag.empty()) rc.checkpoint = ckpt_flag;
    if (seed_flag >= 0) rc.grid.seed = uint64_t(seed_flag);
    if (rc.checkpoint.empty())
        throw InvalidInput("run.checkpoint is required (set it in the config or via --checkpoint)");

    const attack::PatchArtifact art = attack::load_artifact(artifact_dir);
    detect::Detector model = detect::Detector::load(rc.checkpoint);
    if (art.detector_hash != model.weight_hash())
        throw InvalidInput("artifact was optimized against detector " + art.detector_hash +
                           " but the checkpoint hashes to " + model.weight_hash());
    const std::vector<imaging::Image> backgrounds =
        toolkit::load_backgrounds(rc.backgrounds, model.config().input_size, rc.seed);

    std::vector<evaluation::FrameRecord> records;
    const std::vector<evaluation::CellResult> cells =
        evaluation::drive_by_grid(art, model, rc.grid, backgrounds, &records);
    fs::create_directories(out);
    evaluation::emit_report(cells, out + "/grid.csv");

    std::string body;
    for (const evaluation::FrameRecord& r : records) {
        json j;
        j["cell"] = r.cell_id;
        j["z_clean"] = r.z_clean;
        j["z_adv"] = r.z_adv;
        j["class_clean"] = r.class_clean;
        j["class_adv"] = r.class_adv;
        j["counts"] = r.counts;
        j["success"] = r.success;
        body += j.dump();
        body += '\n';
    }
    write_text(out + "/verdicts.jsonl", body);

    long n_a = 0, n_s = 0;
    for (const evaluation::CellResult& c : cells) {
        n_a += c.n_a;
        n_s += c.n_s;
    }
    uint64_t mix[2] = {rc.seed, 0x686f'6c64ull};
    const uint64_t holdout_seed = fnv1a64(mix, sizeof mix);
    const evaluation::PairStats pairs = evaluation::success_rate_over_pairs(
        art, model, rc.holdout_pairs, holdout_seed, rc.grid.th);

    json j;
    j["schema"] = 1;
    j["kind"] = "evaluation";
    j["vector"] = losses::vector_name(art.config.vector);
    j["detector_hash"] = art.detector_hash;
    j["grid"] = {{"cells", cells.size()},
                 {"n_a", n_a},
                 {"n_s", n_s},
                 {"r_s", n_a > 0 ? double(n_s) / double(n_a) : 0.0}};
    j["holdout"] = {{"pairs", rc.holdout_pairs},
                    {"n_a", pairs.n_a},
                    {"n_s", pairs.n_s},
                    {"r_s", pairs.r_s()},
                    {"seed", holdout_seed}};
    write_text(out + "/summary.json", j.dump(2) + "\n");
    write_run_lock(out, "evaluate", rc.grid.seed, config_path, rc.checkpoint);
    std::printf("grid R_s %.4f (%ld/%ld); holdout R_s %.4f (%ld/%ld) -> %s\n",
                n_a > 0 ? double(n_s) / double(n_a) : 0.0, n_s, n_a, pairs.r_s(), pairs.n_s,
                pairs.n_a, out.c_str());
}

void run_report(const std::string& eval_dir, const std::string& out) {
    const std::vector<evaluation::CellResult> cells =
        evaluation::parse_report(eval_dir + "/grid.csv");
    std::vector<std::string> ills;
    for (const evaluation::CellResult& c : cells)
        if (std::find(ills.begin(), ills.end(), c.illumination) == ills.end())
            ills.push_back(c.illumination);
    fs::create_directories(out);
    for (const std::string& ill : ills) {
        const std::string path = out + "/heatmap_" + ill + ".png";
        evaluation::render_heatmap(cells, ill, path);
        std::printf("wrote %s\n", path.c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial patch toolkit for an anchor-based sign detector"};
    app.require_subcommand(1);

    // synth-data
    std::string sd_out, sd_profile = "toy";
    int sd_count = 800;
    long long sd_seed = 1;
    CLI::App* synth = app.add_subcommand("synth-data", "render a labeled synthetic dataset");
    synth->add_option("--out", sd_out, "output directory")->required();
    synth->add_option("--count", sd_count, "number of frames")->check(CLI::PositiveNumber);
    synth->add_option("--seed", sd_seed, "dataset seed")->check(CLI::NonNegativeNumber);
    synth->add_option("--profile", sd_profile, "toy or full")
        ->check(CLI::IsMember({"toy", "full"}));
    synth->callback([&] { run_synth(sd_out, sd_count, sd_seed, sd_profile); });

    // train-detector
    std::string td_data, td_val, td_out, td_profile = "toy";
    int td_epochs = 30;
    double td_lr = 4e-3;
    long long td_seed = 7;
    bool td_verbose = false;
    CLI::App* train = app.add_subcommand("train-detector", "fit the detector on a dataset");
    train->add_option("--data", td_data, "training dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    train->add_option("--val", td_val, "validation dataset directory")
        ->check(CLI::ExistingDirectory);
    train->add_option("--out", td_out, "output directory")->required();
    train->add_option("--epochs", td_epochs, "training epochs")->check(CLI::PositiveNumber);
    train->add_option("--lr", td_lr, "learning rate")->check(CLI::PositiveNumber);
    train->add_option("--seed", td_seed, "training seed")->check(CLI::NonNegativeNumber);
    train->add_flag("--verbose", td_verbose, "per-epoch loss lines");
    train->add_option("--profile", td_profile, "toy or full")
        ->check(CLI::IsMember({"toy", "full"}));
    train->callback(
        [&] { run_train(td_data, td_val, td_out, td_epochs, td_lr, td_seed, td_profile, td_verbose); });

    // gen-ae
    std::string ga_attack, ga_config, ga_out, ga_ckpt, ga_bg, ga_mask;
    long long ga_seed = -1;
    int ga_steps = -1, ga_source = -1, ga_target = -1;
    CLI::App* gen = app.add_subcommand("gen-ae", "optimize an adversarial patch");
    gen->add_option("--attack", ga_attack, "attack vector: ha, aa, nta, or ta")
        ->required()
        ->check(CLI::IsMember({"ha", "aa", "nta", "ta"}));
    gen->add_option("--config", ga_config, "run configuration file")->check(CLI::ExistingFile);
    gen->add_option("--out", ga_out, "artifact directory")->required();
    gen->add_option("--seed", ga_seed, "override the run seed")->check(CLI::NonNegativeNumber);
    gen->add_option("--steps", ga_steps, "override the step count")
        ->check(CLI::NonNegativeNumber);
    gen->add_option("--source-label", ga_source, "override the source class")
        ->check(CLI::NonNegativeNumber);
    gen->add_option("--target-label", ga_target, "override the target class")
        ->check(CLI::NonNegativeNumber);
    gen->add_option("--checkpoint", ga_ckpt, "detector checkpoint")->check(CLI::ExistingFile);
    gen->add_option("--backgrounds", ga_bg, "background corpus (dir or procedural:<n>)");
    gen->add_option("--mask", ga_mask, "mask spec (default, disc, full, or a png path)");
    gen->callback([&] {
        run_gen(ga_attack, ga_config, ga_out, ga_seed, ga_steps, ga_source, ga_target, ga_ckpt,
                ga_bg, ga_mask);
    });

    // evaluate
    std::string ev_config, ev_artifact, ev_out, ev_ckpt;
    long long ev_seed = -1;
    CLI::App* eval = app.add_subcommand("evaluate", "drive-by grid evaluation of an artifact");
    eval->add_option("--config", ev_config, "run configuration file")->check(CLI::ExistingFile);
    eval->add_option("--artifact", ev_artifact, "patch artifact directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval->add_option("--out", ev_out, "evaluation output directory")->required();
    eval->add_option("--checkpoint", ev_ckpt, "detector checkpoint")->check(CLI::ExistingFile);
    eval->add_option("--seed", ev_seed, "override the grid seed")->check(CLI::NonNegativeNumber);
    eval->callback([&] { run_eval(ev_config, ev_artifact, ev_out, ev_ckpt, ev_seed); });

    // report
    std::string rp_eval, rp_out;
    CLI::App* report = app.add_subcommand("report", "render heatmaps from an evaluation");
    report->add_option("--eval", rp_eval, "evaluation directory (with grid.csv)")
        ->required()
        ->check(CLI::ExistingDirectory);
    report->add_option("--out", rp_out, "report output directory")->required();
    report->callback([&] { run_report(rp_eval, rp_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
