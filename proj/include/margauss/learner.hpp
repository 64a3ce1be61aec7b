#pragma once

#include <cstddef>
#include <string>

#include "margauss/approx_math.hpp"
#include "margauss/core.hpp"

namespace margauss {

/// Common surface of every online algorithm driven by the harness.
///
/// process() must return the probability the model assigned to ex.label
/// *before* learning from ex; the harness relies on that ordering for
/// progressive validation.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;

  virtual Prediction predict(const SparseExample& ex) const = 0;
  virtual Prediction process(const SparseExample& ex) = 0;
  virtual std::string name() const = 0;

  /// Count of non-fatal numeric events (e.g. Newton hitting its cap).
  virtual std::size_t warnings() const { return 0; }
};

}  // namespace margauss
