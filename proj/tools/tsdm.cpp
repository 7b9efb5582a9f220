#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tsdm/evalkit.hpp"
#include "tsdm/pipeline.hpp"
#include "tsdm/synthlab.hpp"

namespace {

using namespace tsdm;

int cmd_synth(const std::string& spec_file, const std::string& out_dir) {
  const synth::SceneSpec spec = synth::parse_scene_spec(spec_file);
  const Sequence seq = synth::render_sequence(spec);
  write_sequence(out_dir, seq);
  std::printf("wrote %zu frames to %s\n", seq.frames.size(), out_dir.c_str());
  return 0;
}

int cmd_track(const std::string& seq_dir, const std::string& config_file,
              const std::string& weights_file, const std::string& out_file,
              bool no_mg, bool no_dr, const std::string& dump_dir,
              std::int64_t seed_override) {
  pipeline::RunConfig cfg = config_file.empty()
                                ? pipeline::apply_env_seed(pipeline::RunConfig{})
                                : pipeline::load_run_config(config_file);
  if (no_mg) cfg.enable_mg = false;
  if (no_dr) cfg.enable_dr = false;
  if (!weights_file.empty()) cfg.weights_path = weights_file;
  if (seed_override >= 0) cfg.seed = std::uint64_t(seed_override);
  cfg.validate();

  const Sequence seq = load_sequence(seq_dir);

  core::NccCore::Options opt;
  opt.scales = cfg.core_scales;
  opt.k = cfg.core_k;
  const core::NccCore tracker(opt);

  refiner::RefinerModel model;
  const refiner::RefinerModel* model_ptr = nullptr;
  if (cfg.enable_dr) {
    if (cfg.weights_path.empty())
      throw std::runtime_error(
          "depth refiner enabled: pass --weights or set weights= in the config "
          "(or use --no-dr)");
    model = refiner::load_model(cfg.weights_path);
    model_ptr = &model;
  }

  const std::filesystem::path dump = dump_dir;
  const auto result = pipeline::run_track(seq, cfg, tracker, model_ptr,
                                          dump_dir.empty() ? nullptr : &dump);
  pipeline::write_results(out_file, result);
  std::printf("tracked %zu frames in %.3f s (%.1f FPS), results in %s\n",
              seq.frames.size(), result.seconds, result.fps, out_file.c_str());
  return 0;
}

int cmd_train(int n, std::uint64_t seed, const std::string& out_file,
              const refiner::TrainConfig& base_cfg, const std::string& pool_mode) {
  refiner::TrainConfig cfg = base_cfg;
  cfg.seed = seed;
  cfg.validate();

  if (pool_mode != "gap" && pool_mode != "flatten")
    throw std::runtime_error("--pool must be gap or flatten");
  const refiner::HeadPool pool = pool_mode == "gap"
                                     ? refiner::HeadPool::GlobalAverage
                                     : refiner::HeadPool::Flatten;

  std::printf("generating %d training crops (seed %llu)...\n", n,
              (unsigned long long)seed);
  const auto data = synth::make_refiner_dataset(n, seed);

  refiner::RefinerModel model = refiner::RefinerModel::make(seed, pool);
  refiner::TrainTrace trace;
  model = refiner::train(std::move(model), data, cfg, &trace,
                         [&](int epoch, const refiner::RefinerModel&) {
                           std::printf("epoch %2d/%d  mean loss %.6f  lr %.5f -> %.5f\n",
                                       epoch, cfg.epochs,
                                       trace.epoch_mean_loss[epoch - 1],
                                       trace.epoch_first_lr[epoch - 1],
                                       trace.epoch_last_lr[epoch - 1]);
                           std::fflush(stdout);
                         });
  refiner::save_model(out_file, model);
  std::printf("saved weights to %s\n", out_file.c_str());
  return 0;
}

int cmd_eval(const std::string& results_file, const std::string& gt_dir,
             const std::string& tags_file, const std::string& report_file,
             const std::string& curve_file) {
  const auto results = pipeline::read_results(results_file);
  const auto gt = load_ground_truth(std::filesystem::path(gt_dir) / "groundtruth.txt");
  if (results.size() != gt.size())
    throw std::runtime_error("results have " + std::to_string(results.size()) +
                             " frames but ground truth has " +
                             std::to_string(gt.size()));

  std::vector<std::string> tags;
  if (!tags_file.empty())
    tags = load_tags(tags_file);
  else if (std::filesystem::exists(std::filesystem::path(gt_dir) / "tags.txt"))
    tags = load_tags(std::filesystem::path(gt_dir) / "tags.txt");
  tags.resize(gt.size());

  eval::SequenceResult seq_result;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    seq_result.boxes.push_back(results[i].box);
    seq_result.ious.push_back(eval::iou(results[i].box, gt[i]));
  }

  const auto curve = eval::success_curve(seq_result.ious);
  const double auc_score = eval::auc(curve);
  const auto report = eval::category_report({seq_result}, {tags});

  if (!report_file.empty()) {
    std::ofstream out(report_file);
    if (!out) throw std::runtime_error("cannot open report file " + report_file);
    out << "# success thresholds: 0.00..1.00 step 0.01, ratio = frames with IOU > t\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "# AUC %.6f\n", auc_score);
    out << buf << eval::format_report_text(report) << "\n"
        << eval::format_report_csv(report);
  }
  if (!curve_file.empty()) {
    std::ofstream out(curve_file);
    if (!out) throw std::runtime_error("cannot open curve file " + curve_file);
    out << eval::format_curve(curve);
  }

  std::printf("frames %zu  mean IOU %.4f  AUC %.4f\n", gt.size(), report.overall,
              auc_score);
  return 0;
}

int cmd_augment(const std::string& in_file, const std::string& box_str,
                std::uint64_t seed, const std::string& out_file) {
  std::stringstream ss(box_str);
  double v[4];
  char sep;
  for (int i = 0; i < 4; ++i) {
    if (i > 0 && (!(ss >> sep) || sep != ','))
      throw std::runtime_error("--box expects left,top,w,h");
    if (!(ss >> v[i])) throw std::runtime_error("--box expects left,top,w,h");
  }
  const ColorRaster img = load_color_png(in_file);
  synth::AugmentSpec spec;
  spec.seed = seed;
  const ColorRaster augmented =
      synth::mg_augment(img, Box{v[0], v[1], v[2], v[3]}, spec);
  save_color_png(out_file, augmented);
  std::printf("wrote %s\n", out_file.c_str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double eps) {
  const auto data = synth::make_refiner_dataset(1, seed);
  const auto model = refiner::RefinerModel::make(seed);
  const double err = refiner::grad_check(model, data[0].input, data[0].gt, eps);
  std::printf("max relative gradient error: %.3e (eps %.1e, %s)\n", err, eps,
              err < 1e-4 ? "ok" : "SUSPECT");
  return err < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TSDM RGB-D tracker: depth-masked search, NCC core, depth refiner"};
  app.require_subcommand(1);

  std::string spec_file, out_dir;
  auto* synth_cmd = app.add_subcommand("synth", "render a synthetic RGB-D sequence");
  synth_cmd->add_option("--spec", spec_file, "scene spec file")->required();
  synth_cmd->add_option("--out", out_dir, "output sequence directory")->required();

  std::string seq_dir, config_file, weights_file, results_file, dump_dir;
  bool no_mg = false, no_dr = false;
  std::int64_t seed_override = -1;
  auto* track_cmd = app.add_subcommand("track", "track a sequence");
  track_cmd->add_option("--seq", seq_dir, "sequence directory")->required();
  track_cmd->add_option("--config", config_file, "run config file");
  track_cmd->add_option("--weights", weights_file, "refiner weights file");
  track_cmd->add_option("--out", results_file, "results file")->required();
  track_cmd->add_flag("--no-mg", no_mg, "disable the mask generator");
  track_cmd->add_flag("--no-dr", no_dr, "disable the depth refiner");
  track_cmd->add_option("--dump-masks", dump_dir, "dump M / Mc / Xm PNGs here");
  track_cmd->add_option("--seed", seed_override, "override the config seed");

  int train_n = 2000;
  std::uint64_t train_seed = 1;
  std::string train_out, pool_mode = "gap";
  refiner::TrainConfig train_cfg;
  auto* train_cmd =
      app.add_subcommand("train-refiner", "train the refiner on synthetic crops");
  train_cmd->add_option("--n", train_n, "training sample count")->required();
  train_cmd->add_option("--seed", train_seed, "rng seed");
  train_cmd->add_option("--out", train_out, "weights output file")->required();
  train_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
  train_cmd->add_option("--batch", train_cfg.batch, "mini-batch size");
  train_cmd->add_option("--lr-start", train_cfg.lr_start, "initial learning rate");
  train_cmd->add_option("--lr-end", train_cfg.lr_end, "final learning rate");
  train_cmd->add_option("--freeze-epochs", train_cfg.backbone_freeze_epochs,
                        "epochs with frozen branch stacks");
  train_cmd->add_option("--pool", pool_mode, "head pooling: gap|flatten");

  std::string eval_results, eval_gt, eval_tags, eval_report, eval_curve;
  auto* eval_cmd = app.add_subcommand("eval", "score a results file");
  eval_cmd->add_option("--results", eval_results, "results file")->required();
  eval_cmd->add_option("--gt", eval_gt, "sequence directory with groundtruth.txt")
      ->required();
  eval_cmd->add_option("--tags", eval_tags, "per-frame category tokens");
  eval_cmd->add_option("--report", eval_report, "category report output");
  eval_cmd->add_option("--curve", eval_curve, "success curve output");

  std::string aug_in, aug_box, aug_out;
  std::uint64_t aug_seed = 1;
  auto* aug_cmd = app.add_subcommand(
      "augment", "paint mask-colored rectangles outside a target box");
  aug_cmd->add_option("--in", aug_in, "input PNG")->required();
  aug_cmd->add_option("--box", aug_box, "target box left,top,w,h")->required();
  aug_cmd->add_option("--seed", aug_seed, "rng seed");
  aug_cmd->add_option("--out", aug_out, "output PNG")->required();

  std::uint64_t gc_seed = 1;
  double gc_eps = 1e-5;
  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "verify analytic gradients against finite differences");
  gc_cmd->add_option("--seed", gc_seed, "rng seed");
  gc_cmd->add_option("--eps", gc_eps, "finite-difference step");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return cmd_synth(spec_file, out_dir);
    if (*track_cmd)
      return cmd_track(seq_dir, config_file, weights_file, results_file, no_mg,
                       no_dr, dump_dir, seed_override);
    if (*train_cmd)
      return cmd_train(train_n, train_seed, train_out, train_cfg, pool_mode);
    if (*eval_cmd)
      return cmd_eval(eval_results, eval_gt, eval_tags, eval_report, eval_curve);
    if (*aug_cmd) return cmd_augment(aug_in, aug_box, aug_seed, aug_out);
    if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_eps);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
