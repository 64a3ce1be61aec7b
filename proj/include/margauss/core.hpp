#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace margauss {

using FeatureId = std::uint64_t;

/// Raised when an accumulation or update leaves the finite range.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Feature {
  FeatureId id = 0;
  double value = 0.0;
};

/// One round of the online stream: the active features and the label in {-1,+1}.
struct SparseExample {
  std::vector<Feature> features;
  int label = 1;
};

/// Throws std::invalid_argument on a label outside {-1,+1}, a non-finite
/// value, or a repeated feature id.
void validate(const SparseExample& ex);

/// Maps {0,1} or {-1,+1} to {-1,+1}.
int normalize_label(int raw);

struct GaussianParam {
  double mean = 0.0;
  double variance = 1.0;

  bool valid() const;
};

struct PriorConfig {
  double mu0 = 0.0;
  double sigma0_sq = 1.0;
  // Weight bound; kept as metadata, weights are never projected onto it.
  std::optional<double> bound;

  void validate() const;
};

/// Per-feature diagonal Gaussian state. Features that were never stored read
/// back as the prior.
class ModelState {
 public:
  explicit ModelState(PriorConfig prior = {});

  const PriorConfig& prior() const { return prior_; }

  GaussianParam get_or_init(FeatureId id) const;
  void store(FeatureId id, GaussianParam param);
  bool contains(FeatureId id) const { return params_.count(id) != 0; }
  std::size_t size() const { return params_.size(); }
  const std::unordered_map<FeatureId, GaussianParam>& params() const {
    return params_;
  }

 private:
  PriorConfig prior_;
  std::unordered_map<FeatureId, GaussianParam> params_;
};

/// Mean and variance of the active weighted sum with feature i removed.
struct ExcludedPrior {
  double mean = 0.0;
  double variance = 0.0;
};

struct ExampleStats {
  double mu_t = 0.0;
  double sigma_sq_t = 0.0;
  // Parallel to the example's feature list.
  std::vector<GaussianParam> params;
  std::vector<ExcludedPrior> excluded;
};

/// Aggregate mean/variance of x^T w plus the self-excluding pairs, one pass.
ExampleStats example_stats(const ModelState& model, const SparseExample& ex);

}  // namespace margauss
