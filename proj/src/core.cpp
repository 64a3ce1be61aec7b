#include "margauss/core.hpp"

#include <algorithm>
#include <cmath>

namespace margauss {

namespace {

bool has_duplicate_ids(std::span<const Feature> features) {
  const std::size_t n = features.size();
  if (n <= 48) {
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (features[i].id == features[j].id) return true;
    return false;
  }
  std::vector<FeatureId> ids;
  ids.reserve(n);
  for (const auto& f : features) ids.push_back(f.id);
  std::sort(ids.begin(), ids.end());
  return std::adjacent_find(ids.begin(), ids.end()) != ids.end();
}

}  // namespace

void validate(const SparseExample& ex) {
  if (ex.label != 1 && ex.label != -1)
    throw std::invalid_argument("label must be -1 or +1, got " +
                                std::to_string(ex.label));
  for (const auto& f : ex.features)
    if (!std::isfinite(f.value))
      throw std::invalid_argument("non-finite value for feature " +
                                  std::to_string(f.id));
  if (has_duplicate_ids(ex.features))
    throw std::invalid_argument("duplicate feature id within one example");
}

int normalize_label(int raw) {
  if (raw == 1) return 1;
  if (raw == 0 || raw == -1) return -1;
  throw std::invalid_argument("label must be in {0,1} or {-1,+1}, got " +
                              std::to_string(raw));
}

bool GaussianParam::valid() const {
  return std::isfinite(mean) && std::isfinite(variance) && variance > 0.0;
}

void PriorConfig::validate() const {
  if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq))
    throw std::invalid_argument("prior variance must be positive and finite");
  if (!std::isfinite(mu0))
    throw std::invalid_argument("prior mean must be finite");
  if (bound && !(*bound > 0.0))
    throw std::invalid_argument("weight bound must be positive");
}

ModelState::ModelState(PriorConfig prior) : prior_(prior) {
  prior_.validate();
}

GaussianParam ModelState::get_or_init(FeatureId id) const {
  auto it = params_.find(id);
  if (it == params_.end()) return {prior_.mu0, prior_.sigma0_sq};
  return it->second;
}

void ModelState::store(FeatureId id, GaussianParam param) {
  if (!param.valid())
    throw NumericError("refusing to store invalid Gaussian for feature " +
                       std::to_string(id));
  params_.insert_or_assign(id, param);
}

ExampleStats example_stats(const ModelState& model, const SparseExample& ex) {
  validate(ex);
  ExampleStats stats;
  const std::size_t n = ex.features.size();
  stats.params.reserve(n);
  stats.excluded.resize(n);

  for (const auto& f : ex.features) {
    const GaussianParam p = model.get_or_init(f.id);
    stats.params.push_back(p);
    stats.mu_t += f.value * p.mean;
    stats.sigma_sq_t += f.value * f.value * p.variance;
  }
  if (!std::isfinite(stats.mu_t) || !std::isfinite(stats.sigma_sq_t))
    throw NumericError("example mean or variance overflowed");

  for (std::size_t k = 0; k < n; ++k) {
    const double x = ex.features[k].value;
    const GaussianParam& p = stats.params[k];
    stats.excluded[k].mean = stats.mu_t - x * p.mean;
    // cancellation can leave a tiny negative residue
    stats.excluded[k].variance =
        std::max(0.0, stats.sigma_sq_t - x * x * p.variance);
  }
  return stats;
}

}  // namespace margauss
