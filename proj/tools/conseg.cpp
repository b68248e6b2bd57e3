#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "conseg/log.hpp"
#include "conseg/nifti.hpp"
#include "conseg/pipeline.hpp"

namespace {

conseg::Axis parse_axis(const std::string& s) {
  if (s == "x") return conseg::Axis::X;
  if (s == "y") return conseg::Axis::Y;
  if (s == "z") return conseg::Axis::Z;
  throw conseg::ConfigError("unknown axis: " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus segmentation toolkit: silver-standard mask fusion, "
               "evaluation metrics, error heat maps and statistics."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a key=value config file");

  conseg::PipelineOptions opt;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  bool keep_going = false;
  int connectivity = 26;
  double threshold = 0.5;

  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Seed for randomized steps")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads, 0 = hardware count")
      ->capture_default_str();
  app.add_flag("--keep-going", keep_going, "Continue the batch after per-subject failures");
  app.add_option("--connectivity", connectivity, "Voxel connectivity for component cleanup")
      ->check(CLI::IsMember({6, 26}))
      ->capture_default_str();
  app.add_option("--threshold", threshold, "Probability threshold (foreground at >= t)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  // fuse
  CLI::App* fuse = app.add_subcommand("fuse", "STAPLE consensus over rater mask directories");
  std::vector<std::string> rater_dirs;
  std::string staple_config_path;
  fuse->add_option("--raters", rater_dirs, "Rater mask directory (repeat, two or more)")
      ->required();
  fuse->add_option("--staple-config", staple_config_path,
                   "Key=value file overriding the STAPLE parameters");
  fuse->add_option("--staple-init-p", opt.staple.init_p, "Initial rater sensitivity")
      ->capture_default_str();
  fuse->add_option("--staple-init-q", opt.staple.init_q, "Initial rater specificity")
      ->capture_default_str();
  fuse->add_option("--staple-max-iters", opt.staple.max_iters, "EM iteration cap")
      ->capture_default_str();
  fuse->add_option("--staple-tol", opt.staple.tol, "Mean |dW| convergence tolerance")
      ->capture_default_str();
  std::string staple_region = "union_box";
  fuse->add_option("--staple-region", staple_region, "EM region: union_box or whole_volume")
      ->check(CLI::IsMember({"union_box", "whole_volume"}))
      ->capture_default_str();

  // fuse-triplanar
  CLI::App* tri = app.add_subcommand(
      "fuse-triplanar", "Average per-plane probability maps and post-process the mask");
  std::string axial_dir, coronal_dir, sagittal_dir;
  tri->add_option("--axial", axial_dir, "Axial-model probability directory")->required();
  tri->add_option("--coronal", coronal_dir, "Coronal-model probability directory")->required();
  tri->add_option("--sagittal", sagittal_dir, "Sagittal-model probability directory")
      ->required();

  // eval
  CLI::App* eval = app.add_subcommand("eval", "Score method masks against ground truth");
  std::string gt_dir;
  std::vector<std::string> method_dirs;
  std::string reference;
  eval->add_option("--ground-truth", gt_dir, "Ground-truth mask directory")->required();
  eval->add_option("--method", method_dirs, "Method mask directory (repeat per method)")
      ->required();
  eval->add_option("--reference", reference,
                   "Reference method for significance tests (default: first)");

  // heatmap
  CLI::App* heat = app.add_subcommand("heatmap", "FP/FN projection heat maps over a batch");
  std::string heat_gt_dir, heat_method_dir, heat_axis = "all";
  heat->add_option("--ground-truth", heat_gt_dir, "Ground-truth mask directory")->required();
  heat->add_option("--method", heat_method_dir, "Method mask directory")->required();
  heat->add_option("--axis", heat_axis, "Projection axis: x, y, z or all")
      ->check(CLI::IsMember({"x", "y", "z", "all"}))
      ->capture_default_str();

  // patches
  CLI::App* patches = app.add_subcommand("patches", "Sample 2-D training patches per slice");
  std::string vol_dir, brain_dir, patch_axis = "z";
  int preset = 0;
  patches->add_option("--volumes", vol_dir, "Intensity volume directory")->required();
  patches->add_option("--brain-masks", brain_dir, "Brain mask directory")->required();
  patches->add_option("--axis", patch_axis, "Slice axis")
      ->check(CLI::IsMember({"x", "y", "z"}))
      ->capture_default_str();
  patches->add_option("--patch-height", opt.patch.height, "Patch height in pixels")
      ->capture_default_str();
  patches->add_option("--patch-width", opt.patch.width, "Patch width in pixels")
      ->capture_default_str();
  patches
      ->add_option("--patches-per-slice", opt.patch.patches_per_slice,
                   "Patches per brain-bearing slice")
      ->capture_default_str();
  patches
      ->add_option("--preset", preset,
                   "Named configuration: 128 (3 per slice), 96 or 144 (10 per slice)")
      ->check(CLI::IsMember({96, 128, 144}));

  // stats
  CLI::App* stats = app.add_subcommand("stats", "Aggregate an existing records.csv");
  std::string records_path;
  stats->add_option("--records", records_path, "records.csv produced by eval")->required();
  stats->add_option("--reference", reference,
                    "Reference method for significance tests (default: first)");

  CLI11_PARSE(app, argc, argv);

  try {
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.threads = threads;
    opt.keep_going = keep_going;
    opt.connectivity =
        connectivity == 6 ? conseg::Connectivity::Face6 : conseg::Connectivity::Full26;
    opt.threshold = threshold;
    opt.staple.threshold = threshold;
    opt.reference_method = reference;
    opt.staple.region = staple_region == "whole_volume" ? conseg::StapleRegion::WholeVolume
                                                        : conseg::StapleRegion::UnionBox;
    if (!staple_config_path.empty()) {
      // Flags given on the command line win over the file.
      const std::vector<std::byte> bytes = conseg::read_file(staple_config_path);
      const conseg::StapleConfig file_cfg = conseg::staple_config_from_key_values(
          std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      if (fuse->count("--staple-init-p") == 0) opt.staple.init_p = file_cfg.init_p;
      if (fuse->count("--staple-init-q") == 0) opt.staple.init_q = file_cfg.init_q;
      if (fuse->count("--staple-max-iters") == 0) opt.staple.max_iters = file_cfg.max_iters;
      if (fuse->count("--staple-tol") == 0) opt.staple.tol = file_cfg.tol;
      if (fuse->count("--staple-region") == 0) opt.staple.region = file_cfg.region;
      if (app.count("--threshold") == 0) opt.staple.threshold = file_cfg.threshold;
    }
    if (preset == 128) {
      opt.patch = {128, 128, 3, opt.seed};
    } else if (preset == 96) {
      opt.patch = {96, 96, 10, opt.seed};
    } else if (preset == 144) {
      opt.patch = {144, 144, 10, opt.seed};
    }

    if (fuse->parsed()) {
      std::vector<std::filesystem::path> dirs(rater_dirs.begin(), rater_dirs.end());
      return conseg::run_fuse(dirs, opt);
    }
    if (tri->parsed()) return conseg::run_triplanar(axial_dir, coronal_dir, sagittal_dir, opt);
    if (eval->parsed()) {
      std::vector<std::filesystem::path> dirs(method_dirs.begin(), method_dirs.end());
      return conseg::run_eval(gt_dir, dirs, opt);
    }
    if (heat->parsed()) {
      std::vector<conseg::Axis> axes;
      if (heat_axis == "all")
        axes = {conseg::Axis::X, conseg::Axis::Y, conseg::Axis::Z};
      else
        axes = {parse_axis(heat_axis)};
      return conseg::run_heatmap(heat_gt_dir, heat_method_dir, axes, opt);
    }
    if (patches->parsed()) return conseg::run_patches(vol_dir, brain_dir, parse_axis(patch_axis), opt);
    if (stats->parsed()) return conseg::run_stats(records_path, opt);
    std::fprintf(stderr, "error: no command selected\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
