#include "conseg/staple.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

namespace conseg {

namespace {

constexpr double kEps = 1e-7;

double clamp_perf(double v) { return std::clamp(v, kEps, 1.0 - kEps); }

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Box {
  Eigen::Index x0 = 0, x1 = -1, y0 = 0, y1 = -1, z0 = 0, z1 = -1;

  bool empty() const { return x1 < x0; }
  Eigen::Index count() const { return (x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1); }
};

Box union_bounding_box(const std::vector<Volume>& masks) {
  const Dims3& d = masks.front().dims();
  Box b{d.nx, -1, d.ny, -1, d.nz, -1};
  for (const Volume& m : masks)
    for (Eigen::Index z = 0; z < d.nz; ++z)
      for (Eigen::Index y = 0; y < d.ny; ++y)
        for (Eigen::Index x = 0; x < d.nx; ++x) {
          if (m(x, y, z) == 0.0f) continue;
          b.x0 = std::min(b.x0, x);
          b.x1 = std::max(b.x1, x);
          b.y0 = std::min(b.y0, y);
          b.y1 = std::max(b.y1, y);
          b.z0 = std::min(b.z0, z);
          b.z1 = std::max(b.z1, z);
        }
  return b;
}

Box pad_and_clip(const Box& b, const Dims3& d) {
  Box out;
  out.x0 = std::max<Eigen::Index>(0, b.x0 - 1);
  out.y0 = std::max<Eigen::Index>(0, b.y0 - 1);
  out.z0 = std::max<Eigen::Index>(0, b.z0 - 1);
  out.x1 = std::min(d.nx - 1, b.x1 + 1);
  out.y1 = std::min(d.ny - 1, b.y1 + 1);
  out.z1 = std::min(d.nz - 1, b.z1 + 1);
  return out;
}

// Sums the rater terms in ascending order so the result is bit-identical
// under any permutation of the raters.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (const double t : terms) s += t;
  return s;
}

}  // namespace

void validate(const StapleConfig& cfg) {
  if (!(cfg.init_p > 0.0 && cfg.init_p < 1.0) || !(cfg.init_q > 0.0 && cfg.init_q < 1.0))
    throw ConfigError("staple config: init_p and init_q must lie in (0,1)");
  if (cfg.max_iters < 1) throw ConfigError("staple config: max_iters must be >= 1");
  if (!(cfg.tol > 0.0)) throw ConfigError("staple config: tol must be > 0");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
    throw ConfigError("staple config: threshold must lie in (0,1)");
}

std::string to_key_values(const StapleConfig& cfg) {
  std::ostringstream os;
  os << "init_p=" << format_double(cfg.init_p) << "\n";
  os << "init_q=" << format_double(cfg.init_q) << "\n";
  os << "prior_mode=global_mean\n";
  os << "region=" << (cfg.region == StapleRegion::UnionBox ? "union_box" : "whole_volume")
     << "\n";
  os << "max_iters=" << cfg.max_iters << "\n";
  os << "tol=" << format_double(cfg.tol) << "\n";
  os << "threshold=" << format_double(cfg.threshold) << "\n";
  return os.str();
}

StapleConfig staple_config_from_key_values(const std::string& text) {
  StapleConfig cfg;
  std::istringstream is(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto parse_double = [&](const std::string& v, const char* key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw ConfigError(std::string("staple config: bad value for ") + key + ": " + v);
    return x;
  };
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("staple config: expected key=value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "init_p") {
      cfg.init_p = parse_double(val, "init_p");
    } else if (key == "init_q") {
      cfg.init_q = parse_double(val, "init_q");
    } else if (key == "prior_mode") {
      if (val != "global_mean")
        throw ConfigError("staple config: unknown prior_mode: " + val);
      cfg.prior_mode = PriorMode::GlobalMean;
    } else if (key == "region") {
      if (val == "union_box")
        cfg.region = StapleRegion::UnionBox;
      else if (val == "whole_volume")
        cfg.region = StapleRegion::WholeVolume;
      else
        throw ConfigError("staple config: unknown region: " + val);
    } else if (key == "max_iters") {
      cfg.max_iters = static_cast<int>(parse_double(val, "max_iters"));
    } else if (key == "tol") {
      cfg.tol = parse_double(val, "tol");
    } else if (key == "threshold") {
      cfg.threshold = parse_double(val, "threshold");
    } else {
      throw ConfigError("staple config: unknown key: " + key);
    }
  }
  validate(cfg);
  return cfg;
}

StapleResult staple_fuse(const std::vector<Volume>& masks, const StapleConfig& cfg) {
  validate(cfg);
  if (masks.size() < 2) throw EmptyInput("staple_fuse: need at least 2 rater masks");
  if (masks.size() > 64) throw ConfigError("staple_fuse: at most 64 raters supported");
  const std::size_t J = masks.size();
  const Volume& first = masks.front();
  for (const Volume& m : masks) {
    require_kind(m, ValueKind::Binary, "staple_fuse");
    require_same_shape(first, m, "staple_fuse");
  }
  const Dims3& dims = first.dims();

  StapleResult res;
  res.weights = make_volume(dims, first.spacing, ValueKind::Probability);
  res.posterior = Grid3<double>(dims);
  res.degenerate.assign(J, false);

  const Box ub = union_bounding_box(masks);
  if (ub.empty()) {
    // Every rater empty: consensus is empty, nothing to estimate.
    res.performances.assign(J, {clamp_perf(cfg.init_p), clamp_perf(cfg.init_q)});
    res.degenerate.assign(J, true);
    res.converged = true;
    return res;
  }
  const Box box = cfg.region == StapleRegion::WholeVolume
                      ? Box{0, dims.nx - 1, 0, dims.ny - 1, 0, dims.nz - 1}
                      : pad_and_clip(ub, dims);
  const Eigen::Index n_region = box.count();

  // Group region voxels by their rater vote pattern. All EM sums run over
  // patterns in first-raster-occurrence order, which is invariant under
  // rater permutation, so results are bit-reproducible.
  std::unordered_map<std::uint64_t, std::int32_t> pattern_id;
  std::vector<std::uint64_t> keys;
  std::vector<std::int64_t> counts;
  std::vector<std::int32_t> voxel_pattern(static_cast<std::size_t>(n_region));
  {
    std::size_t vi = 0;
    for (Eigen::Index z = box.z0; z <= box.z1; ++z)
      for (Eigen::Index y = box.y0; y <= box.y1; ++y)
        for (Eigen::Index x = box.x0; x <= box.x1; ++x, ++vi) {
          std::uint64_t key = 0;
          for (std::size_t j = 0; j < J; ++j)
            if (masks[j](x, y, z) != 0.0f) key |= std::uint64_t{1} << j;
          auto [it, inserted] = pattern_id.try_emplace(key, static_cast<std::int32_t>(keys.size()));
          if (inserted) {
            keys.push_back(key);
            counts.push_back(0);
          }
          ++counts[static_cast<std::size_t>(it->second)];
          voxel_pattern[vi] = it->second;
        }
  }
  const std::size_t P = keys.size();

  std::vector<std::int64_t> rater_fg(J, 0);
  for (std::size_t pi = 0; pi < P; ++pi)
    for (std::size_t j = 0; j < J; ++j)
      if (keys[pi] >> j & 1) rater_fg[j] += counts[pi];
  std::int64_t total_fg = 0;
  for (std::size_t j = 0; j < J; ++j) {
    total_fg += rater_fg[j];
    res.degenerate[j] = rater_fg[j] == 0 || rater_fg[j] == n_region;
  }
  const double f = static_cast<double>(total_fg) /
                   (static_cast<double>(J) * static_cast<double>(n_region));
  res.prior = f;
  const double log_f = std::log(f);
  const double log_1mf = std::log(1.0 - f);

  std::vector<double> p(J, clamp_perf(cfg.init_p)), q(J, clamp_perf(cfg.init_q));
  std::vector<double> lp(J), l1mp(J), lq(J), l1mq(J);
  auto refresh_logs = [&] {
    for (std::size_t j = 0; j < J; ++j) {
      lp[j] = std::log(p[j]);
      l1mp[j] = std::log(1.0 - p[j]);
      lq[j] = std::log(q[j]);
      l1mq[j] = std::log(1.0 - q[j]);
    }
  };
  refresh_logs();

  std::vector<double> W(P, 0.0), W_prev(P, 0.0);
  std::vector<double> terms_a(J), terms_b(J);

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    // E-step per pattern, products in log space.
    double ll = 0.0;
    for (std::size_t pi = 0; pi < P; ++pi) {
      const std::uint64_t key = keys[pi];
      for (std::size_t j = 0; j < J; ++j) {
        const bool dj = key >> j & 1;
        terms_a[j] = dj ? lp[j] : l1mp[j];
        terms_b[j] = dj ? l1mq[j] : lq[j];
      }
      const double la = log_f + sorted_sum(terms_a);
      const double lb = log_1mf + sorted_sum(terms_b);
      const double hi = std::max(la, lb);
      ll += static_cast<double>(counts[pi]) * (hi + std::log1p(std::exp(std::min(la, lb) - hi)));
      W[pi] = 1.0 / (1.0 + std::exp(lb - la));
    }
    res.ll_trace.push_back(ll);

    double change = 0.0;
    for (std::size_t pi = 0; pi < P; ++pi)
      change += static_cast<double>(counts[pi]) * std::abs(W[pi] - W_prev[pi]);
    change /= static_cast<double>(n_region);

    // M-step.
    double sum_w = 0.0, sum_1w = 0.0;
    std::vector<double> num_p(J, 0.0), num_q(J, 0.0);
    for (std::size_t pi = 0; pi < P; ++pi) {
      const double cw = static_cast<double>(counts[pi]) * W[pi];
      const double c1w = static_cast<double>(counts[pi]) * (1.0 - W[pi]);
      sum_w += cw;
      sum_1w += c1w;
      const std::uint64_t key = keys[pi];
      for (std::size_t j = 0; j < J; ++j) {
        if (key >> j & 1)
          num_p[j] += cw;
        else
          num_q[j] += c1w;
      }
    }
    for (std::size_t j = 0; j < J; ++j) {
      if (sum_w > 0.0) p[j] = clamp_perf(num_p[j] / sum_w);
      if (sum_1w > 0.0) q[j] = clamp_perf(num_q[j] / sum_1w);
    }
    refresh_logs();

    res.iterations = iter;
    W_prev = W;
    if (change < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.performances.resize(J);
  for (std::size_t j = 0; j < J; ++j) res.performances[j] = {p[j], q[j]};

  std::size_t vi = 0;
  for (Eigen::Index z = box.z0; z <= box.z1; ++z)
    for (Eigen::Index y = box.y0; y <= box.y1; ++y)
      for (Eigen::Index x = box.x0; x <= box.x1; ++x, ++vi) {
        const double w = W[static_cast<std::size_t>(voxel_pattern[vi])];
        res.posterior(x, y, z) = w;
        res.weights(x, y, z) = static_cast<float>(w);
      }
  return res;
}

Volume binarize(const Volume& weights, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw OutOfRange("binarize: threshold must lie in (0,1)");
  Volume out = make_volume(weights.dims(), weights.spacing, ValueKind::Binary);
  const float t = static_cast<float>(threshold);
  out.data() = (weights.data() >= t).cast<float>();
  return out;
}

Volume majority_vote(const std::vector<Volume>& masks) {
  if (masks.empty()) throw EmptyInput("majority_vote: no masks");
  const Volume& first = masks.front();
  for (const Volume& m : masks) {
    require_kind(m, ValueKind::Binary, "majority_vote");
    require_same_shape(first, m, "majority_vote");
  }
  Eigen::ArrayXi votes = Eigen::ArrayXi::Zero(first.data().size());
  for (const Volume& m : masks) votes += (m.data() != 0.0f).cast<int>();
  Volume out = make_volume(first.dims(), first.spacing, ValueKind::Binary);
  const int J = static_cast<int>(masks.size());
  out.data() = (2 * votes > J).cast<float>();
  return out;
}

}  // namespace conseg
