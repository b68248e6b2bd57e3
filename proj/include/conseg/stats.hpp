#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "conseg/metrics.hpp"

namespace conseg {

// Per-subject paired differences (a_i - b_i) between two methods.
struct PairedSample {
  std::vector<double> diffs;
};

enum class TestMethod { Exact, NormalApprox };

inline const char* test_method_name(TestMethod m) {
  return m == TestMethod::Exact ? "exact" : "normal_approx";
}

struct TestResult {
  double w_statistic = 0.0;  // min(W+, W-) in average-rank units
  double p_value = 1.0;
  int n_effective = 0;  // sample size after dropping zero differences
  TestMethod method = TestMethod::Exact;
};

// Two-sided Wilcoxon signed-rank test. Zero differences are dropped and
// tied magnitudes get average ranks. Up to exact_cutoff effective samples
// the p-value is the exact tail mass over all 2^n sign assignments of the
// observed ranks; beyond that a normal approximation with tie-corrected
// variance and continuity correction is used. Throws AllZeroDifferences
// when nothing remains after dropping zeros.
TestResult wilcoxon_signed_rank(const PairedSample& sample, int exact_cutoff = 25);

// Multiplies each p-value by the list length, clamped to 1.
std::vector<double> bonferroni(const std::vector<double>& p_values);

constexpr std::array<const char*, 5> kMetricNames = {"dice", "sensitivity", "specificity",
                                                     "hausdorff_mm", "mean_dist_mm"};

// True for metrics where smaller is better (the two distances).
constexpr std::array<bool, 5> kMetricLowerIsBetter = {false, false, false, true, true};

std::array<double, 5> metric_values(const EvalRecord& r);

struct SubjectRecord {
  std::string subject;
  std::string method;
  EvalRecord metrics;
};

struct MethodSummary {
  std::string method;
  std::array<double, 5> mean{};
  std::array<double, 5> stddev{};  // sample standard deviation, 0 for n == 1
  std::array<int, 5> n{};          // records aggregated per metric (NaN dropped)
  std::array<bool, 5> top_two{};
};

struct SignificanceCell {
  std::string method;
  std::string metric;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  double w_statistic = 0.0;
  int n_effective = 0;
  TestMethod test_method = TestMethod::Exact;
};

struct Report {
  std::vector<MethodSummary> summaries;  // in order of first appearance
  std::string reference_method;
  std::vector<SignificanceCell> significance;  // (methods-1) x 5, Bonferroni family
};

// Aggregates per-subject records into per-method mean and sample standard
// deviation for each metric, marks the two best methods per metric, and
// tests every method against the reference with Wilcoxon signed-rank,
// Bonferroni-adjusted over all cells. Identical samples (all differences
// zero) are reported as p = 1 by convention. NaN metric values (the empty
// mask sentinel) are dropped per metric, pairwise for the tests.
Report aggregate_report(const std::vector<SubjectRecord>& records,
                        const std::string& reference_method);

std::string report_csv(const Report& r);
std::string report_markdown(const Report& r);
std::string significance_csv(const Report& r);

// Significance matrix image: one row per non-reference method, one column
// per metric; 0 (black) where the adjusted p is below alpha, 65535 (white)
// otherwise.
Plane<std::uint16_t> significance_image(const Report& r, double alpha = 0.05);

}  // namespace conseg
