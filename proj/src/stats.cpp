#include "conseg/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace conseg {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt4(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::array<double, 5> metric_values(const EvalRecord& r) {
  return {r.dice, r.sensitivity, r.specificity, r.hausdorff_mm, r.mean_dist_mm};
}

TestResult wilcoxon_signed_rank(const PairedSample& sample, int exact_cutoff) {
  if (exact_cutoff < 0 || exact_cutoff > 62)
    throw ConfigError("wilcoxon: exact_cutoff must lie in [0,62]");
  if (sample.diffs.empty()) throw EmptyInput("wilcoxon: empty sample");
  for (const double x : sample.diffs)
    if (!std::isfinite(x)) throw OutOfRange("wilcoxon: differences must be finite");

  std::vector<double> d;
  for (const double x : sample.diffs)
    if (x != 0.0) d.push_back(x);
  if (d.empty()) throw AllZeroDifferences("wilcoxon: all differences are zero");
  const int n = static_cast<int>(d.size());

  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });

  // Doubled average ranks stay integral even across tie groups.
  std::vector<std::int64_t> r2(d.size());
  std::vector<std::int64_t> tie_sizes;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const std::int64_t doubled = static_cast<std::int64_t>(i) + j + 2;
    for (int k = i; k <= j; ++k) r2[order[k]] = doubled;
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }

  std::int64_t w2_plus = 0, s2 = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    s2 += r2[k];
    if (d[k] > 0.0) w2_plus += r2[k];
  }
  const std::int64_t m2 = std::min(w2_plus, s2 - w2_plus);

  TestResult res;
  res.n_effective = n;
  res.w_statistic = static_cast<double>(m2) / 2.0;

  if (n <= exact_cutoff) {
    // Exact tail mass over all 2^n sign assignments: dp[s] counts the
    // assignments whose positive doubled-rank sum equals s.
    std::vector<std::uint64_t> dp(static_cast<std::size_t>(s2) + 1, 0);
    dp[0] = 1;
    for (std::size_t k = 0; k < d.size(); ++k)
      for (std::int64_t s = s2; s >= r2[k]; --s)
        dp[static_cast<std::size_t>(s)] += dp[static_cast<std::size_t>(s - r2[k])];
    std::uint64_t c = 0;
    for (std::int64_t s = 0; s <= m2; ++s) c += dp[static_cast<std::size_t>(s)];
    for (std::int64_t s = s2 - m2; s <= s2; ++s) c += dp[static_cast<std::size_t>(s)];
    res.p_value = std::min(1.0, static_cast<double>(c) / std::ldexp(1.0, n));
    res.method = TestMethod::Exact;
  } else {
    const double nn = n;
    const double mu = nn * (nn + 1.0) / 4.0;
    double tie_corr = 0.0;
    for (const std::int64_t t : tie_sizes)
      tie_corr += static_cast<double>(t * t * t - t);
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_corr / 48.0;
    const double z = (res.w_statistic - mu + 0.5) / std::sqrt(var);
    const double p = std::erfc(-z / std::sqrt(2.0));
    res.p_value = std::clamp(p, std::numeric_limits<double>::min(), 1.0);
    res.method = TestMethod::NormalApprox;
  }
  return res;
}

std::vector<double> bonferroni(const std::vector<double>& p_values) {
  for (const double p : p_values)
    if (!(p > 0.0 && p <= 1.0)) throw OutOfRange("bonferroni: p-values must lie in (0,1]");
  std::vector<double> out(p_values.size());
  const double m = static_cast<double>(p_values.size());
  for (std::size_t i = 0; i < p_values.size(); ++i) out[i] = std::min(1.0, p_values[i] * m);
  return out;
}

Report aggregate_report(const std::vector<SubjectRecord>& records,
                        const std::string& reference_method) {
  if (records.empty()) throw EmptyInput("aggregate_report: no records");

  std::vector<std::string> methods;
  std::unordered_map<std::string, std::size_t> method_index;
  // subject -> metric values, keyed per method; std::map keeps subject
  // iteration (and so test pairing) deterministic.
  std::vector<std::map<std::string, std::array<double, 5>>> values;
  for (const SubjectRecord& rec : records) {
    auto [it, inserted] = method_index.try_emplace(rec.method, methods.size());
    if (inserted) {
      methods.push_back(rec.method);
      values.emplace_back();
    }
    const bool fresh = values[it->second].emplace(rec.subject, metric_values(rec.metrics)).second;
    if (!fresh)
      throw ConfigError("aggregate_report: duplicate record for subject '" + rec.subject +
                        "', method '" + rec.method + "'");
  }
  if (!method_index.contains(reference_method))
    throw ConfigError("aggregate_report: reference method '" + reference_method +
                      "' has no records");

  Report rep;
  rep.reference_method = reference_method;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodSummary s;
    s.method = methods[mi];
    for (int k = 0; k < 5; ++k) {
      double sum = 0.0;
      int cnt = 0;
      for (const auto& [subject, vals] : values[mi]) {
        if (std::isnan(vals[static_cast<std::size_t>(k)])) continue;
        sum += vals[static_cast<std::size_t>(k)];
        ++cnt;
      }
      s.n[static_cast<std::size_t>(k)] = cnt;
      if (cnt == 0) {
        s.mean[static_cast<std::size_t>(k)] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double mean = sum / cnt;
      s.mean[static_cast<std::size_t>(k)] = mean;
      if (cnt >= 2) {
        double ss = 0.0;
        for (const auto& [subject, vals] : values[mi]) {
          const double v = vals[static_cast<std::size_t>(k)];
          if (std::isnan(v)) continue;
          ss += (v - mean) * (v - mean);
        }
        s.stddev[static_cast<std::size_t>(k)] = std::sqrt(ss / (cnt - 1));
      }
    }
    rep.summaries.push_back(std::move(s));
  }

  // Two best methods per metric: max for the overlap metrics, min for the
  // distances; first-appearance order breaks exact ties.
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<std::size_t> ranked;
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
      if (!std::isnan(rep.summaries[mi].mean[k])) ranked.push_back(mi);
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      const double va = rep.summaries[a].mean[k], vb = rep.summaries[b].mean[k];
      return kMetricLowerIsBetter[k] ? va < vb : va > vb;
    });
    for (std::size_t r = 0; r < std::min<std::size_t>(2, ranked.size()); ++r)
      rep.summaries[ranked[r]].top_two[k] = true;
  }

  // Significance matrix cells, then one Bonferroni family over all of them.
  const std::size_t ref = method_index.at(reference_method);
  std::vector<double> raw;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    if (mi == ref) continue;
    for (std::size_t k = 0; k < 5; ++k) {
      SignificanceCell cell;
      cell.method = methods[mi];
      cell.metric = kMetricNames[k];
      PairedSample sample;
      for (const auto& [subject, vals] : values[mi]) {
        const auto rit = values[ref].find(subject);
        if (rit == values[ref].end()) continue;
        const double a = vals[k], b = rit->second[k];
        if (std::isnan(a) || std::isnan(b)) continue;
        sample.diffs.push_back(a - b);
      }
      if (!sample.diffs.empty()) {
        try {
          const TestResult t = wilcoxon_signed_rank(sample);
          cell.raw_p = t.p_value;
          cell.w_statistic = t.w_statistic;
          cell.n_effective = t.n_effective;
          cell.test_method = t.method;
        } catch (const AllZeroDifferences&) {
          cell.raw_p = 1.0;  // identical samples: no evidence of a difference
        }
      }
      raw.push_back(cell.raw_p);
      rep.significance.push_back(std::move(cell));
    }
  }
  const std::vector<double> adj = bonferroni(raw);
  for (std::size_t i = 0; i < adj.size(); ++i) rep.significance[i].adjusted_p = adj[i];
  return rep;
}

std::string report_csv(const Report& r) {
  std::ostringstream os;
  os << "method,metric,n,mean,stddev,top_two\n";
  for (const MethodSummary& s : r.summaries)
    for (std::size_t k = 0; k < 5; ++k)
      os << s.method << ',' << kMetricNames[k] << ',' << s.n[k] << ',' << fmt(s.mean[k]) << ','
         << fmt(s.stddev[k]) << ',' << (s.top_two[k] ? 1 : 0) << '\n';
  return os.str();
}

std::string report_markdown(const Report& r) {
  std::ostringstream os;
  os << "# Evaluation report\n\n";
  os << "Reference method: `" << r.reference_method << "`\n\n";
  os << "| method |";
  for (const char* name : kMetricNames) os << ' ' << name << " |";
  os << "\n|---|---|---|---|---|---|\n";
  for (const MethodSummary& s : r.summaries) {
    os << "| " << s.method << " |";
    for (std::size_t k = 0; k < 5; ++k) {
      const std::string cell = fmt4(s.mean[k]) + " ± " + fmt4(s.stddev[k]);
      os << ' ' << (s.top_two[k] ? "**" + cell + "**" : cell) << " |";
    }
    os << '\n';
  }
  os << "\nThe two best methods per metric are emboldened.\n";
  if (!r.significance.empty()) {
    os << "\n## Wilcoxon signed-rank vs `" << r.reference_method << "`\n\n";
    os << "| method | metric | raw p | adjusted p | significant (0.05) |\n";
    os << "|---|---|---|---|---|\n";
    for (const SignificanceCell& c : r.significance)
      os << "| " << c.method << " | " << c.metric << " | " << fmt(c.raw_p) << " | "
         << fmt(c.adjusted_p) << " | " << (c.adjusted_p < 0.05 ? "yes" : "no") << " |\n";
  }
  return os.str();
}

std::string significance_csv(const Report& r) {
  std::ostringstream os;
  os << "method,metric,raw_p,adjusted_p,w_statistic,n_effective,test_method\n";
  for (const SignificanceCell& c : r.significance)
    os << c.method << ',' << c.metric << ',' << fmt(c.raw_p) << ',' << fmt(c.adjusted_p) << ','
       << fmt(c.w_statistic) << ',' << c.n_effective << ',' << test_method_name(c.test_method)
       << '\n';
  return os.str();
}

Plane<std::uint16_t> significance_image(const Report& r, double alpha) {
  const Eigen::Index rows = static_cast<Eigen::Index>(r.significance.size() / 5);
  Plane<std::uint16_t> img(rows, 5);
  img.setConstant(65535);
  for (std::size_t i = 0; i < r.significance.size(); ++i)
    if (r.significance[i].adjusted_p < alpha)
      img(static_cast<Eigen::Index>(i / 5), static_cast<Eigen::Index>(i % 5)) = 0;
  return img;
}

}  // namespace conseg
