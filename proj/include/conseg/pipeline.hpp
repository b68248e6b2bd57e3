#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "conseg/preprocess.hpp"
#include "conseg/staple.hpp"

namespace conseg {

// Shared batch options. Role inputs are directories of .nii files; files
// pair into subjects by filename stem across roles.
struct PipelineOptions {
  std::filesystem::path out_dir = ".";
  StapleConfig staple;
  PatchSpec patch;
  Connectivity connectivity = Connectivity::Full26;
  double threshold = 0.5;  // probability-map threshold for the fusion paths
  std::uint64_t seed = 0;
  int threads = 0;  // <= 0 selects the hardware thread count
  bool keep_going = false;
  std::string reference_method;  // empty selects the first method
};

// Exit codes: 0 on success, 2 when any input file was missing, 1 for any
// other per-subject failure. With keep_going the whole batch runs anyway.
int run_fuse(const std::vector<std::filesystem::path>& rater_dirs, const PipelineOptions& opt);

int run_eval(const std::filesystem::path& gt_dir,
             const std::vector<std::filesystem::path>& method_dirs, const PipelineOptions& opt);

int run_heatmap(const std::filesystem::path& gt_dir, const std::filesystem::path& method_dir,
                const std::vector<Axis>& axes, const PipelineOptions& opt);

int run_triplanar(const std::filesystem::path& axial_dir,
                  const std::filesystem::path& coronal_dir,
                  const std::filesystem::path& sagittal_dir, const PipelineOptions& opt);

int run_patches(const std::filesystem::path& volume_dir, const std::filesystem::path& brain_dir,
                Axis axis, const PipelineOptions& opt);

int run_stats(const std::filesystem::path& records_csv, const PipelineOptions& opt);

}  // namespace conseg
