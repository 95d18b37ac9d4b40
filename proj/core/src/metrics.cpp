#include "ratex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ratex {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void require_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

void Confusion::add(std::span<const int> pred, std::span<const int> gold) {
  require_same_length(pred.size(), gold.size(), "confusion");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gold[i] != 0;
    if (p && g) ++tp;
    else if (p) ++fp;
    else if (g) ++fn;
    else ++tn;
  }
}

PRF Confusion::prf(double beta_f) const {
  PRF out;
  out.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  out.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  const double b2 = beta_f * beta_f;
  out.f = ratio((1.0 + b2) * out.precision * out.recall, b2 * out.precision + out.recall);
  return out;
}

PRF token_prf(std::span<const int> pred, std::span<const int> gold, double beta_f) {
  Confusion c;
  c.add(pred, gold);
  return c.prf(beta_f);
}

double average_precision(std::span<const double> scores, std::span<const int> gold) {
  require_same_length(scores.size(), gold.size(), "average_precision");
  const auto order = descending_order(scores);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (gold[order[rank]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw std::invalid_argument("average_precision: no positive items");
  return sum / static_cast<double>(hits);
}

double mean_average_precision(std::span<const std::vector<double>> scores, std::span<const std::vector<int>> gold,
                              MapMode mode) {
  require_same_length(scores.size(), gold.size(), "mean_average_precision");
  if (mode == MapMode::pooled) {
    std::vector<double> all_scores;
    std::vector<int> all_gold;
    for (std::size_t d = 0; d < scores.size(); ++d) {
      require_same_length(scores[d].size(), gold[d].size(), "mean_average_precision");
      all_scores.insert(all_scores.end(), scores[d].begin(), scores[d].end());
      all_gold.insert(all_gold.end(), gold[d].begin(), gold[d].end());
    }
    if (std::find(all_gold.begin(), all_gold.end(), 1) == all_gold.end()) {
      throw std::invalid_argument("mean_average_precision: no document has a positive token");
    }
    return average_precision(all_scores, all_gold);
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t d = 0; d < scores.size(); ++d) {
    require_same_length(scores[d].size(), gold[d].size(), "mean_average_precision");
    if (std::none_of(gold[d].begin(), gold[d].end(), [](int g) { return g != 0; })) continue;
    total += average_precision(scores[d], gold[d]);
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("mean_average_precision: no document has a positive token");
  return total / static_cast<double>(counted);
}

double doc_f1(std::span<const int> pred, std::span<const int> gold) { return token_prf(pred, gold, 1.0).f; }

std::vector<int> topk_threshold(std::span<const double> scores, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw std::invalid_argument("topk_threshold: k must lie in (0, 100]");
  std::vector<int> out(scores.size(), 0);
  if (scores.empty()) return out;
  const double exact = k_percent * static_cast<double>(scores.size()) / 100.0;
  auto m = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  m = std::clamp<std::size_t>(m, 1, scores.size());
  const auto order = descending_order(scores);
  for (std::size_t i = 0; i < m; ++i) out[order[i]] = 1;
  return out;
}

std::vector<std::vector<double>> random_baseline_scores(std::span<const std::size_t> lengths, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out;
  out.reserve(lengths.size());
  for (auto n : lengths) {
    auto& doc = out.emplace_back(n);
    for (auto& s : doc) s = unit(rng);
  }
  return out;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Lentz's continued fraction, evaluated on whichever side converges fastest.
  auto continued_fraction = [](double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < eps) break;
    }
    return h;
  };
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * continued_fraction(a, b, x) / a;
  return 1.0 - front * continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_two_tailed: dof must be > 0");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "paired_t_test");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (mean == 0.0 && sd == 0.0) return {0.0, 1.0};
  sd = std::max(sd, 1e-12);
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  return {t, student_t_two_tailed(t, static_cast<double>(n - 1))};
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> read_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"doc_f1", opt(r.doc_f1)},          {"token_p", opt(r.token_p)},
                     {"token_r", opt(r.token_r)},   {"token_f1", opt(r.token_f1)},
                     {"token_f05", opt(r.token_f05)}, {"map", opt(r.map)},
                     {"coverage", r.coverage},      {"seconds_per_epoch", opt(r.seconds_per_epoch)}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  r.doc_f1 = read_opt(j, "doc_f1");
  r.token_p = read_opt(j, "token_p");
  r.token_r = read_opt(j, "token_r");
  r.token_f1 = read_opt(j, "token_f1");
  r.token_f05 = read_opt(j, "token_f05");
  r.map = read_opt(j, "map");
  r.coverage = j.at("coverage").get<double>();
  r.seconds_per_epoch = read_opt(j, "seconds_per_epoch");
}

std::string format_report_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  std::size_t name_width = 5;
  for (const auto& [name, r] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream out;
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * *v;
    return s.str();
  };
  auto time = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << *v;
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(name_width)) << "Model" << std::right;
  for (const char* h : {"Doc F1", "F1", "F0.5", "P", "R", "MAP", "Cov", "Time"}) out << std::setw(9) << h;
  out << '\n';
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name << std::right;
    for (const auto& cell : {pct(r.doc_f1), pct(r.token_f1), pct(r.token_f05), pct(r.token_p), pct(r.token_r),
                             pct(r.map), pct(r.coverage), time(r.seconds_per_epoch)}) {
      out << std::setw(9) << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ratex
