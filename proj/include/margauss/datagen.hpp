#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "margauss/core.hpp"

namespace margauss {

enum class GenKind { random_binary, random_uniform, categorical };
enum class CategorySelector { zipf, geometric };

GenKind parse_gen_kind(std::string_view s);
std::string to_string(GenKind kind);

struct GenConfig {
  GenKind kind = GenKind::random_binary;
  // Random kinds: d features, each active with probability alpha.
  std::size_t d = 200;
  double alpha = 0.1;
  // Categorical kind: d is the sum of the category sizes.
  std::vector<std::size_t> category_sizes;
  std::size_t draws_per_category = 1;
  CategorySelector selector = CategorySelector::zipf;
  double zipf_exponent = 1.75;
  double geometric_ratio = 0.9;

  double weight_std = 1.0;
  // Optional per-category override of weight_std.
  std::vector<double> category_weight_stds;

  std::uint64_t seed = 0;

  std::size_t dimension() const;
  void validate() const;
};

/// Ground-truth generating weights.
struct TrueModel {
  GenConfig config;
  std::vector<double> weights;

  double score(const SparseExample& ex) const;
};

TrueModel gen_true_model(const GenConfig& cfg);

/// -log sigmoid(y x^T w*), the comparator's loss on one example.
double comparator_loss(const TrueModel& model, const SparseExample& ex);
double comparator_loss(double score, int y);

/// Inverse-CDF sampler over {0, ..., n-1} with weights w(k); exact, no
/// rejection.
class FiniteSampler {
 public:
  FiniteSampler() = default;
  explicit FiniteSampler(std::vector<double> weights);

  static FiniteSampler zipf(std::size_t n, double exponent);
  static FiniteSampler geometric(std::size_t n, double ratio);

  std::size_t size() const { return cdf_.size(); }
  double probability(std::size_t k) const;
  std::size_t operator()(std::mt19937_64& rng) const;

 private:
  std::vector<double> cdf_;
};

/// Deterministic example stream. Weights, feature selection and labels use
/// separate generators, so the weights do not depend on how many examples are
/// drawn.
class StreamGenerator {
 public:
  explicit StreamGenerator(TrueModel model);

  SparseExample next();
  const TrueModel& model() const { return model_; }

 private:
  void draw_random(SparseExample& ex);
  void draw_categorical(SparseExample& ex);

  TrueModel model_;
  std::mt19937_64 feature_rng_;
  std::mt19937_64 label_rng_;
  std::vector<FiniteSampler> samplers_;
  std::vector<FeatureId> offsets_;
};

/// Derives an independent 64-bit seed for a named sub-stream.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

// Line-delimited replay format: label<TAB>id:value,id:value,...
std::string format_example(const SparseExample& ex);
/// Accepts labels in {0,1} or {-1,+1}. Throws std::invalid_argument.
SparseExample parse_example(std::string_view line);
void write_stream(std::ostream& os, const std::vector<SparseExample>& examples);

// Weights file: one `id<TAB>weight` per line.
void write_weights(std::ostream& os, const std::vector<double>& weights);
std::unordered_map<FeatureId, double> read_weights(std::istream& is);

}  // namespace margauss
