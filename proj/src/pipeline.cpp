#include "conseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "conseg/log.hpp"
#include "conseg/metrics.hpp"
#include "conseg/morphology.hpp"
#include "conseg/nifti.hpp"
#include "conseg/pgm.hpp"
#include "conseg/stats.hpp"

namespace conseg {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Role {
  std::string name;
  fs::path dir;
  std::map<std::string, fs::path> by_stem;
};

Role scan_role(const std::string& name, const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw ConfigError("role '" + name + "': not a directory: " + dir.string());
  Role role{name, dir, {}};
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".nii") continue;
    const std::string stem = e.path().stem().string();
    if (!role.by_stem.emplace(stem, e.path()).second)
      throw ConfigError("role '" + name + "': ambiguous subject stem '" + stem + "'");
  }
  return role;
}

void require_distinct_roles(const std::vector<Role>& roles) {
  std::set<fs::path> seen;
  for (const Role& r : roles) {
    fs::path canon = fs::weakly_canonical(r.dir);
    if (!seen.insert(canon).second)
      throw ConfigError("roles must not share a directory: " + r.dir.string());
  }
}

std::vector<std::string> union_of_stems(const std::vector<Role>& roles) {
  std::set<std::string> stems;
  for (const Role& r : roles)
    for (const auto& [stem, path] : r.by_stem) stems.insert(stem);
  return {stems.begin(), stems.end()};
}

// Raised when a subject lacks a file for one of its roles; mapped to exit
// code 2 so batch tooling can distinguish data gaps from processing errors.
struct MissingInput : Error {
  using Error::Error;
};

const fs::path& role_file(const Role& role, const std::string& subject) {
  const auto it = role.by_stem.find(subject);
  if (it == role.by_stem.end())
    throw MissingInput("subject '" + subject + "': missing file for role '" + role.name + "'");
  return it->second;
}

Volume load_binary_mask(const fs::path& path) {
  Volume v = load_nifti(path);
  if (v.kind != ValueKind::Binary) {
    if (!is_binary_data(v.data()))
      throw IoError("not a binary mask (values outside {0,1}): " + path.string());
    v.kind = ValueKind::Binary;
  }
  return v;
}

Volume load_probability_map(const fs::path& path) {
  Volume v = load_nifti(path);
  if (v.kind != ValueKind::Probability) {
    if ((v.data() < 0.0f).any() || (v.data() > 1.0f).any())
      throw OutOfRange("not a probability map (values outside [0,1]): " + path.string());
    v.kind = ValueKind::Probability;
  }
  return v;
}

void write_file_atomic(const fs::path& path, std::span<const std::byte> bytes) {
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

void save_nifti_atomic(const Volume& v, const fs::path& path) {
  const std::vector<std::byte> bytes = write_nifti(v);
  write_file_atomic(path, bytes);
}

struct Outcome {
  bool ok = true;
  bool missing = false;
  std::string message;
};

Outcome outcome_of(const std::string& subject, const std::exception& e, bool missing) {
  Outcome o;
  o.ok = false;
  o.missing = missing;
  o.message = missing ? e.what() : "subject '" + subject + "': " + e.what();
  return o;
}

// Runs work(i) for i in [0, n) on a small thread pool. A failure stops new
// work unless keep_going is set; in-flight items always finish.
void run_pool(std::size_t n, int threads, bool keep_going,
              const std::function<bool(std::size_t)>& work) {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::size_t k = std::min(n, threads <= 0 ? hw : static_cast<std::size_t>(threads));
  if (k <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      if (!work(i) && !keep_going) break;
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    while (true) {
      if (stop.load() && !keep_going) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      if (!work(i)) stop.store(true);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < k; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

int finalize(const std::vector<Outcome>& outcomes) {
  bool any_fail = false, any_missing = false;
  for (const Outcome& o : outcomes) {
    if (o.ok) continue;
    any_fail = true;
    any_missing = any_missing || o.missing;
    log_error(o.message);
  }
  if (!any_fail) return 0;
  return any_missing ? 2 : 1;
}

// Largest-component cleanup that tolerates an empty mask: there is nothing
// to clean, the empty mask is passed through with a warning.
Volume cleanup_mask(const Volume& mask, Connectivity conn, const std::string& subject) {
  if (foreground_count(mask) == 0) {
    log_warn("subject '", subject, "': thresholded mask is empty, skipping component cleanup");
    return mask;
  }
  return largest_component(mask, conn);
}

EvalRecord evaluate_with_sentinel(const Volume& gt, const Volume& seg,
                                  const std::string& subject, const std::string& method) {
  const ConfusionCounts c = confusion_counts(gt, seg);
  EvalRecord rec;
  rec.dice = dice(c);
  rec.sensitivity = sensitivity(c);
  rec.specificity = specificity(c);
  try {
    rec.hausdorff_mm = hausdorff(gt, seg);
    rec.mean_dist_mm = mean_surface_distance(gt, seg);
  } catch (const EmptyMask&) {
    // Distances are undefined against an empty mask; the overlap metrics
    // still stand, so the row survives with nan distance columns.
    log_warn("subject '", subject, "', method '", method,
             "': empty mask, distance metrics recorded as nan");
    rec.hausdorff_mm = std::numeric_limits<double>::quiet_NaN();
    rec.mean_dist_mm = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

std::string records_csv(const std::vector<SubjectRecord>& records) {
  std::ostringstream os;
  os << "subject,method,dice,sensitivity,specificity,hausdorff_mm,mean_dist_mm\n";
  for (const SubjectRecord& r : records)
    os << r.subject << ',' << r.method << ',' << fmt(r.metrics.dice) << ','
       << fmt(r.metrics.sensitivity) << ',' << fmt(r.metrics.specificity) << ','
       << fmt(r.metrics.hausdorff_mm) << ',' << fmt(r.metrics.mean_dist_mm) << '\n';
  return os.str();
}

void write_stats_outputs(const std::vector<SubjectRecord>& records,
                         const std::string& reference, const PipelineOptions& opt) {
  const Report report = aggregate_report(records, reference);
  write_text_atomic(opt.out_dir / "report.csv", report_csv(report));
  write_text_atomic(opt.out_dir / "report.md", report_markdown(report));
  write_text_atomic(opt.out_dir / "significance.csv", significance_csv(report));
  if (!report.significance.empty()) {
    const std::vector<std::byte> pgm = encode_pgm16(significance_image(report));
    write_file_atomic(opt.out_dir / "significance.pgm", pgm);
  }
}

std::string pick_reference(const std::vector<SubjectRecord>& records,
                           const std::string& requested) {
  if (!requested.empty()) return requested;
  if (records.empty()) throw EmptyInput("stats: no records to aggregate");
  return records.front().method;
}

// Plane stored as a single-slice volume, row-major plane flattened with the
// column (faster in-plane axis) fastest, matching extract_slice for Z.
Volume plane_to_volume(const Plane<float>& plane) {
  Volume v = make_volume({plane.cols(), plane.rows(), 1});
  for (Eigen::Index r = 0; r < plane.rows(); ++r)
    for (Eigen::Index c = 0; c < plane.cols(); ++c) v(c, r, 0) = plane(r, c);
  return v;
}

Volume plane_to_volume(const Plane<double>& plane) {
  return plane_to_volume(Plane<float>(plane.cast<float>()));
}

}  // namespace

int run_fuse(const std::vector<fs::path>& rater_dirs, const PipelineOptions& opt) {
  if (rater_dirs.size() < 2) throw ConfigError("fuse: need at least 2 rater directories");
  std::vector<Role> raters;
  for (const fs::path& dir : rater_dirs)
    raters.push_back(scan_role(dir.filename().empty() ? dir.string() : dir.filename().string(),
                               dir));
  require_distinct_roles(raters);
  const std::vector<std::string> subjects = union_of_stems(raters);
  if (subjects.empty()) throw ConfigError("fuse: no .nii inputs found");
  fs::create_directories(opt.out_dir);

  std::vector<Outcome> outcomes(subjects.size());
  run_pool(subjects.size(), opt.threads, opt.keep_going, [&](std::size_t i) {
    const std::string& subject = subjects[i];
    try {
      std::vector<Volume> masks;
      for (const Role& r : raters) masks.push_back(load_binary_mask(role_file(r, subject)));

      const StapleResult res = staple_fuse(masks, opt.staple);
      const Volume mask =
          cleanup_mask(binarize(res.weights, opt.staple.threshold), opt.connectivity, subject);
      const Volume mv = majority_vote(masks);

      save_nifti_atomic(res.weights, opt.out_dir / (subject + "_staple_prob.nii"));
      save_nifti_atomic(mask, opt.out_dir / (subject + "_staple_mask.nii"));
      save_nifti_atomic(mv, opt.out_dir / (subject + "_mv_mask.nii"));

      std::ostringstream perf;
      perf << "rater,p,q,degenerate\n";
      for (std::size_t j = 0; j < raters.size(); ++j)
        perf << raters[j].name << ',' << fmt(res.performances[j].p) << ','
             << fmt(res.performances[j].q) << ',' << (res.degenerate[j] ? 1 : 0) << '\n';
      write_text_atomic(opt.out_dir / (subject + "_performance.csv"), perf.str());

      log_info("subject '", subject, "': staple ", res.iterations, " iterations, converged=",
               res.converged ? "yes" : "no");
      return true;
    } catch (const MissingInput& e) {
      outcomes[i] = outcome_of(subject, e, true);
    } catch (const std::exception& e) {
      outcomes[i] = outcome_of(subject, e, false);
    }
    return false;
  });
  return finalize(outcomes);
}

int run_eval(const fs::path& gt_dir, const std::vector<fs::path>& method_dirs,
             const PipelineOptions& opt) {
  if (method_dirs.empty()) throw ConfigError("eval: need at least 1 method directory");
  std::vector<Role> roles;
  roles.push_back(scan_role("ground-truth", gt_dir));
  for (const fs::path& dir : method_dirs)
    roles.push_back(scan_role(dir.filename().empty() ? dir.string() : dir.filename().string(),
                              dir));
  require_distinct_roles(roles);
  const Role& gt_role = roles.front();
  std::vector<std::string> subjects;
  for (const auto& [stem, path] : gt_role.by_stem) subjects.push_back(stem);
  if (subjects.empty()) throw ConfigError("eval: no ground-truth .nii inputs found");
  fs::create_directories(opt.out_dir);

  std::vector<Outcome> outcomes(subjects.size());
  std::vector<std::vector<SubjectRecord>> rows(subjects.size());
  run_pool(subjects.size(), opt.threads, opt.keep_going, [&](std::size_t i) {
    const std::string& subject = subjects[i];
    try {
      const Volume gt = load_binary_mask(role_file(gt_role, subject));
      for (std::size_t m = 1; m < roles.size(); ++m) {
        const Volume seg = load_binary_mask(role_file(roles[m], subject));
        rows[i].push_back(
            {subject, roles[m].name, evaluate_with_sentinel(gt, seg, subject, roles[m].name)});
      }
      return true;
    } catch (const MissingInput& e) {
      outcomes[i] = outcome_of(subject, e, true);
    } catch (const std::exception& e) {
      outcomes[i] = outcome_of(subject, e, false);
    }
    rows[i].clear();
    return false;
  });

  std::vector<SubjectRecord> records;
  for (const auto& subject_rows : rows)
    records.insert(records.end(), subject_rows.begin(), subject_rows.end());
  write_text_atomic(opt.out_dir / "records.csv", records_csv(records));
  if (records.empty()) {
    log_warn("eval: no successful rows, skipping the aggregate report");
  } else {
    write_stats_outputs(records, pick_reference(records, opt.reference_method), opt);
  }
  return finalize(outcomes);
}

int run_heatmap(const fs::path& gt_dir, const fs::path& method_dir,
                const std::vector<Axis>& axes, const PipelineOptions& opt) {
  if (axes.empty()) throw ConfigError("heatmap: no axes selected");
  std::vector<Role> roles;
  roles.push_back(scan_role("ground-truth", gt_dir));
  roles.push_back(scan_role(
      method_dir.filename().empty() ? method_dir.string() : method_dir.filename().string(),
      method_dir));
  require_distinct_roles(roles);
  std::vector<std::string> subjects;
  for (const auto& [stem, path] : roles[0].by_stem) subjects.push_back(stem);
  if (subjects.empty()) throw ConfigError("heatmap: no ground-truth .nii inputs found");
  fs::create_directories(opt.out_dir);

  std::vector<Outcome> outcomes(subjects.size());
  std::vector<ErrorVolumes> errs(subjects.size());
  std::vector<bool> have(subjects.size(), false);
  run_pool(subjects.size(), opt.threads, opt.keep_going, [&](std::size_t i) {
    const std::string& subject = subjects[i];
    try {
      const Volume gt = load_binary_mask(role_file(roles[0], subject));
      const Volume seg = load_binary_mask(role_file(roles[1], subject));
      errs[i] = error_volumes(gt, seg);
      have[i] = true;
      return true;
    } catch (const MissingInput& e) {
      outcomes[i] = outcome_of(subject, e, true);
    } catch (const std::exception& e) {
      outcomes[i] = outcome_of(subject, e, false);
    }
    return false;
  });

  std::vector<Volume> fps, fns;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (!have[i]) continue;
    fps.push_back(std::move(errs[i].fp_mask));
    fns.push_back(std::move(errs[i].fn_mask));
  }
  if (fps.empty()) {
    log_warn("heatmap: no successful subjects, no maps written");
    return finalize(outcomes);
  }
  if (fps.size() > 1)
    log_warn("heatmap: aggregating ", fps.size(),
             " subjects on one grid; co-registration is the caller's responsibility");

  try {
    for (const Axis axis : axes) {
      const Plane<double> fp_map = projection_heatmap(fps, axis);
      const Plane<double> fn_map = projection_heatmap(fns, axis);
      const std::string ax = axis_name(axis);
      write_file_atomic(opt.out_dir / ("fp_" + ax + ".pgm"),
                        encode_pgm16(quantize_unit_plane(fp_map)));
      write_file_atomic(opt.out_dir / ("fn_" + ax + ".pgm"),
                        encode_pgm16(quantize_unit_plane(fn_map)));
      write_file_atomic(opt.out_dir / ("fp_" + ax + ".csg0"),
                        write_raw(plane_to_volume(fp_map)));
      write_file_atomic(opt.out_dir / ("fn_" + ax + ".csg0"),
                        write_raw(plane_to_volume(fn_map)));
    }
  } catch (const std::exception& e) {
    log_error("heatmap: ", e.what());
    return 1;
  }
  return finalize(outcomes);
}

int run_triplanar(const fs::path& axial_dir, const fs::path& coronal_dir,
                  const fs::path& sagittal_dir, const PipelineOptions& opt) {
  std::vector<Role> roles;
  roles.push_back(scan_role("axial", axial_dir));
  roles.push_back(scan_role("coronal", coronal_dir));
  roles.push_back(scan_role("sagittal", sagittal_dir));
  require_distinct_roles(roles);
  const std::vector<std::string> subjects = union_of_stems(roles);
  if (subjects.empty()) throw ConfigError("fuse-triplanar: no .nii inputs found");
  fs::create_directories(opt.out_dir);

  std::vector<Outcome> outcomes(subjects.size());
  run_pool(subjects.size(), opt.threads, opt.keep_going, [&](std::size_t i) {
    const std::string& subject = subjects[i];
    try {
      const Volume p_ax = load_probability_map(role_file(roles[0], subject));
      const Volume p_cor = load_probability_map(role_file(roles[1], subject));
      const Volume p_sag = load_probability_map(role_file(roles[2], subject));

      const Volume fused = fuse_triplanar(p_ax, p_cor, p_sag);
      const Volume mask = threshold_prob(fused, opt.threshold);
      const Volume final_mask = cleanup_mask(mask, opt.connectivity, subject);

      save_nifti_atomic(fused, opt.out_dir / (subject + "_fused_prob.nii"));
      save_nifti_atomic(mask, opt.out_dir / (subject + "_fused_mask.nii"));
      save_nifti_atomic(final_mask, opt.out_dir / (subject + "_final_mask.nii"));
      return true;
    } catch (const MissingInput& e) {
      outcomes[i] = outcome_of(subject, e, true);
    } catch (const std::exception& e) {
      outcomes[i] = outcome_of(subject, e, false);
    }
    return false;
  });
  return finalize(outcomes);
}

int run_patches(const fs::path& volume_dir, const fs::path& brain_dir, Axis axis,
                const PipelineOptions& opt) {
  std::vector<Role> roles;
  roles.push_back(scan_role("volumes", volume_dir));
  roles.push_back(scan_role("brain-masks", brain_dir));
  require_distinct_roles(roles);
  std::vector<std::string> subjects;
  for (const auto& [stem, path] : roles[0].by_stem) subjects.push_back(stem);
  if (subjects.empty()) throw ConfigError("patches: no volume .nii inputs found");
  fs::create_directories(opt.out_dir);

  PatchSpec spec = opt.patch;
  spec.seed = opt.seed;

  std::vector<Outcome> outcomes(subjects.size());
  run_pool(subjects.size(), opt.threads, opt.keep_going, [&](std::size_t i) {
    const std::string& subject = subjects[i];
    try {
      const Volume vol = load_nifti(role_file(roles[0], subject));
      const Volume brain = load_binary_mask(role_file(roles[1], subject));
      const std::vector<Patch> patches = sample_patches(vol, brain, axis, spec);

      std::ostringstream manifest;
      manifest << "axis,slice,row0,col0,file\n";
      for (std::size_t k = 0; k < patches.size(); ++k) {
        const Patch& p = patches[k];
        char idx[16];
        std::snprintf(idx, sizeof(idx), "%05zu", k);
        const std::string base = subject + "_p" + idx;
        write_file_atomic(opt.out_dir / (base + ".csg0"),
                          write_raw(plane_to_volume(p.pixels)));
        write_file_atomic(opt.out_dir / (base + "_mask.csg0"),
                          write_raw(plane_to_volume(p.mask_pixels)));
        manifest << axis_name(p.origin.axis) << ',' << p.origin.slice << ',' << p.origin.row0
                 << ',' << p.origin.col0 << ',' << base << ".csg0\n";
      }
      write_text_atomic(opt.out_dir / (subject + "_patches.csv"), manifest.str());
      log_info("subject '", subject, "': wrote ", patches.size(), " patches");
      return true;
    } catch (const MissingInput& e) {
      outcomes[i] = outcome_of(subject, e, true);
    } catch (const std::exception& e) {
      outcomes[i] = outcome_of(subject, e, false);
    }
    return false;
  });
  return finalize(outcomes);
}

int run_stats(const fs::path& records_path, const PipelineOptions& opt) {
  const std::vector<std::byte> bytes = read_file(records_path);
  std::istringstream is(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  std::string line;
  if (!std::getline(is, line) ||
      line != "subject,method,dice,sensitivity,specificity,hausdorff_mm,mean_dist_mm")
    throw ConfigError("stats: unexpected records header in " + records_path.string());

  auto parse_double = [&](const std::string& field) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
      throw ConfigError("stats: bad numeric field '" + field + "' in " + records_path.string());
    return v;
  };

  std::vector<SubjectRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 7)
      throw ConfigError("stats: expected 7 fields, got " + std::to_string(fields.size()) +
                        " in line: " + line);
    SubjectRecord rec;
    rec.subject = fields[0];
    rec.method = fields[1];
    rec.metrics.dice = parse_double(fields[2]);
    rec.metrics.sensitivity = parse_double(fields[3]);
    rec.metrics.specificity = parse_double(fields[4]);
    rec.metrics.hausdorff_mm = parse_double(fields[5]);
    rec.metrics.mean_dist_mm = parse_double(fields[6]);
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw EmptyInput("stats: no records in " + records_path.string());
  fs::create_directories(opt.out_dir);
  write_stats_outputs(records, pick_reference(records, opt.reference_method), opt);
  return 0;
}

}  // namespace conseg
