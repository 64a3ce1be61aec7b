#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "margauss/datagen.hpp"
#include "margauss/learner.hpp"

namespace margauss {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct LabeledRound {
  SparseExample example;
  double comparator_loss = 0.0;
};

class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  virtual std::optional<LabeledRound> next() = 0;
};

/// T rounds from a synthetic generator; the comparator is the true model.
class GeneratedSource final : public ExampleSource {
 public:
  GeneratedSource(TrueModel model, std::uint64_t rounds);
  std::optional<LabeledRound> next() override;

 private:
  StreamGenerator gen_;
  std::uint64_t remaining_;
};

/// Replays the line format. Features missing from `weights` have comparator
/// weight 0; with no weights at all the comparator predicts 1/2.
class ReplaySource final : public ExampleSource {
 public:
  ReplaySource(std::istream& in, std::unordered_map<FeatureId, double> weights = {});
  std::optional<LabeledRound> next() override;

 private:
  std::istream& in_;
  std::unordered_map<FeatureId, double> weights_;
  std::string line_;
  std::size_t lineno_ = 0;
};

/// In-memory rounds, mostly for tests.
class VectorSource final : public ExampleSource {
 public:
  explicit VectorSource(std::vector<LabeledRound> rounds);
  std::optional<LabeledRound> next() override;

 private:
  std::vector<LabeledRound> rounds_;
  std::size_t pos_ = 0;
};

struct Checkpoint {
  std::uint64_t t = 0;
  double regret = 0.0;
  double regret_over_log_t = 0.0;
  double learner_loss = 0.0;
  double comparator_loss = 0.0;
};

struct RegretSeries {
  std::vector<Checkpoint> checkpoints;
  std::uint64_t rounds = 0;
  double final_regret = 0.0;
  double r_T = 0.0;  // final_regret / log(rounds)
  std::size_t warnings = 0;
  double seconds = 0.0;
};

/// t = ceil(ratio^k), deduplicated, restricted to [2, T], always ending at T.
std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t T,
                                                 double ratio = 1.25);

struct RunOptions {
  // Empty: geometric schedule up to max_rounds (or, for unbounded sources,
  // only the final round is recorded).
  std::vector<std::uint64_t> checkpoints;
  std::uint64_t max_rounds = 0;  // 0: until the source is exhausted
};

/// Progressive validation: each round scores the example with the current
/// model, charges -log p minus the comparator loss, then lets the learner
/// update.
RegretSeries run_stream(OnlineLearner& learner, ExampleSource& source,
                        const RunOptions& opts);

// ---------------------------------------------------------------------------
// Hyperparameter grids

using ParamSet = std::map<std::string, double>;

/// Cartesian product; the last key varies fastest.
std::vector<ParamSet> make_lattice(const std::map<std::string, std::vector<double>>& axes);

struct GridResult {
  std::size_t index = 0;  // position in the lattice
  ParamSet params;
  double r_T = 0.0;
  bool ok = true;
  std::string error;
};

/// Runs every lattice point (possibly concurrently) and returns results
/// ordered by r_T, failed points last, ties by lattice index.
std::vector<GridResult> grid_search(
    const std::vector<ParamSet>& lattice,
    const std::function<RegretSeries(const ParamSet&)>& run,
    unsigned threads = 0);

// ---------------------------------------------------------------------------
// CSV

void emit_csv(const RegretSeries& series, std::ostream& os);
void emit_csv(const std::vector<GridResult>& grid, std::ostream& os);
void emit_csv(const RegretSeries& series, const std::string& path);
void emit_csv(const std::vector<GridResult>& grid, const std::string& path);

/// Reads back the checkpoint columns written by emit_csv(RegretSeries).
std::vector<Checkpoint> read_series_csv(std::istream& is);

}  // namespace margauss
