#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ratex {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Precision, recall and F-beta over 0/1 sequences; any 0/0 ratio is 0.
PRF token_prf(std::span<const int> pred, std::span<const int> gold, double beta_f = 1.0);

/// Confusion counts pooled across documents.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  void add(std::span<const int> pred, std::span<const int> gold);
  PRF prf(double beta_f = 1.0) const;
};

/// Average precision of one ranking: mean precision@rank over positive items,
/// descending score, ties to the lower index. Zero positives throws.
double average_precision(std::span<const double> scores, std::span<const int> gold);

enum class MapMode {
  per_document,  // mean of per-document AP over documents with a positive token
  pooled,        // one AP over all tokens of all documents
};

double mean_average_precision(std::span<const std::vector<double>> scores, std::span<const std::vector<int>> gold,
                              MapMode mode = MapMode::per_document);

/// Binary F1 of the positive class.
double doc_f1(std::span<const int> pred, std::span<const int> gold);

/// Marks the ceil(k N / 100) highest scores (at least one), ties to the lower index.
std::vector<int> topk_threshold(std::span<const double> scores, double k_percent);

/// Independent U[0,1) scores per document.
std::vector<std::vector<double>> random_baseline_scores(std::span<const std::size_t> lengths, std::uint64_t seed);

struct TTest {
  double t = 0.0;
  double p = 1.0;
};

/// Two-tailed paired t-test on a - b with n - 1 degrees of freedom.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularised incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_tailed(double t, double dof);

struct EvalReport {
  std::optional<double> doc_f1;  // absent for token-only baselines
  std::optional<double> token_p;
  std::optional<double> token_r;
  std::optional<double> token_f1;
  std::optional<double> token_f05;
  std::optional<double> map;
  double coverage = 0.0;
  std::optional<double> seconds_per_epoch;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// Aligned plain-text table: Doc F1, F1, F0.5, P, R, MAP, Coverage, Time. Values in percent.
std::string format_report_table(std::span<const std::pair<std::string, EvalReport>> rows);

}  // namespace ratex
