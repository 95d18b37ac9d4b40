#pragma once

// Plain-loop reference implementations used as test oracles. They share no
// code with the library beyond reading parameter values.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ratex/encoder.hpp"
#include "ratex/heads.hpp"

namespace ratex::testing {

using Matrix = std::vector<std::vector<double>>;

/// allowed(i, j): may query i attend to key j.
using Mask = std::function<bool(std::size_t, std::size_t)>;

/// Dense masked transformer encoder; positions are 0..N-1 unless given.
Matrix dense_encode(const std::vector<std::size_t>& ids, const EncoderConfig& cfg, const EncoderParams& params,
                    const Mask& allowed, const std::vector<std::size_t>& positions = {});

struct DenseHeadOutput {
  std::vector<double> scores;
  std::vector<double> weights;
  double y_hat = 0.0;
};

DenseHeadOutput dense_head(const Matrix& t, const SoftAttentionParams& params, double beta);

/// Brute-force confusion counts and F-beta.
struct BruteConfusion {
  double precision = 0.0, recall = 0.0, f = 0.0;
};
BruteConfusion brute_prf(const std::vector<int>& pred, const std::vector<int>& gold, double beta_f);

/// Average precision straight from the definition: for every positive item,
/// count items ranked at or above it (higher score, or equal score and lower index).
double brute_average_precision(const std::vector<double>& scores, const std::vector<int>& gold);

}  // namespace ratex::testing

namespace ratex::testing {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
};

/// Compares backward() against central differences for every element of
/// every named parameter. `loss` must rebuild the graph on each call.
GradCheckResult check_gradients(const std::function<Var()>& loss,
                                const std::vector<std::pair<std::string, Var>>& params, double eps = 1e-5);

/// Uniform random values in [-scale, scale] for every parameter.
void randomize(const std::vector<std::pair<std::string, Var>>& params, std::uint64_t seed, double scale = 0.5);

}  // namespace ratex::testing

#include "ratex/model.hpp"

namespace ratex::testing {

template <class P>
std::vector<std::pair<std::string, Var>> named(const P& params) {
  std::vector<std::pair<std::string, Var>> out;
  params.visit([&](const std::string& name, const Var& v) { out.emplace_back(name, v); });
  return out;
}

}  // namespace ratex::testing
