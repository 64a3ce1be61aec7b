#include "margauss/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "margauss/approx_math.hpp"

namespace margauss {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

GeneratedSource::GeneratedSource(TrueModel model, std::uint64_t rounds)
    : gen_(std::move(model)), remaining_(rounds) {}

std::optional<LabeledRound> GeneratedSource::next() {
  if (remaining_ == 0) return std::nullopt;
  --remaining_;
  LabeledRound r{gen_.next()};
  r.comparator_loss = comparator_loss(gen_.model(), r.example);
  return r;
}

ReplaySource::ReplaySource(std::istream& in,
                           std::unordered_map<FeatureId, double> weights)
    : in_(in), weights_(std::move(weights)) {}

std::optional<LabeledRound> ReplaySource::next() {
  while (std::getline(in_, line_)) {
    ++lineno_;
    if (line_.empty() || line_ == "\r") continue;
    LabeledRound r;
    try {
      r.example = parse_example(line_);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("replay line " + std::to_string(lineno_) + ": " +
                               e.what());
    }
    double score = 0.0;
    for (const auto& f : r.example.features) {
      auto it = weights_.find(f.id);
      if (it != weights_.end()) score += f.value * it->second;
    }
    r.comparator_loss = comparator_loss(score, r.example.label);
    return r;
  }
  if (in_.bad()) throw std::runtime_error("I/O error reading replay stream");
  return std::nullopt;
}

VectorSource::VectorSource(std::vector<LabeledRound> rounds)
    : rounds_(std::move(rounds)) {}

std::optional<LabeledRound> VectorSource::next() {
  if (pos_ >= rounds_.size()) return std::nullopt;
  return rounds_[pos_++];
}

std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t T, double ratio) {
  if (!(ratio > 1.0)) throw std::invalid_argument("checkpoint ratio must exceed 1");
  std::vector<std::uint64_t> out;
  for (double v = 1.0; v <= static_cast<double>(T); v *= ratio) {
    const auto t = static_cast<std::uint64_t>(std::ceil(v - 1e-9));
    if (t >= 2 && t <= T && (out.empty() || out.back() != t)) out.push_back(t);
  }
  if (T >= 2 && (out.empty() || out.back() != T)) out.push_back(T);
  return out;
}

RegretSeries run_stream(OnlineLearner& learner, ExampleSource& source,
                        const RunOptions& opts) {
  std::vector<std::uint64_t> schedule = opts.checkpoints;
  if (schedule.empty() && opts.max_rounds > 0)
    schedule = geometric_checkpoints(opts.max_rounds);
  if (!std::is_sorted(schedule.begin(), schedule.end()) ||
      std::adjacent_find(schedule.begin(), schedule.end()) != schedule.end())
    throw std::invalid_argument("checkpoints must be strictly increasing");

  const auto start = std::chrono::steady_clock::now();
  RegretSeries series;
  CompensatedSum learner_loss, comp_loss, regret;
  std::size_t next_cp = 0;
  std::uint64_t t = 0;

  auto record = [&](std::uint64_t at) {
    Checkpoint cp;
    cp.t = at;
    cp.regret = regret.value();
    cp.learner_loss = learner_loss.value();
    cp.comparator_loss = comp_loss.value();
    cp.regret_over_log_t =
        at >= 2 ? cp.regret / std::log(static_cast<double>(at)) : 0.0;
    series.checkpoints.push_back(cp);
  };

  while (opts.max_rounds == 0 || t < opts.max_rounds) {
    std::optional<LabeledRound> round = source.next();
    if (!round) break;
    ++t;
    const Prediction p = learner.process(round->example);
    const double loss = p.log_loss();
    learner_loss.add(loss);
    comp_loss.add(round->comparator_loss);
    regret.add(loss - round->comparator_loss);
    while (next_cp < schedule.size() && schedule[next_cp] < t) ++next_cp;
    if (next_cp < schedule.size() && schedule[next_cp] == t) {
      record(t);
      ++next_cp;
    }
  }

  series.rounds = t;
  series.final_regret = regret.value();
  series.r_T = t >= 2 ? series.final_regret / std::log(static_cast<double>(t)) : 0.0;
  if (t >= 2 && (series.checkpoints.empty() || series.checkpoints.back().t != t))
    record(t);
  series.warnings = learner.warnings();
  series.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 start)
                       .count();
  return series;
}

std::vector<ParamSet> make_lattice(
    const std::map<std::string, std::vector<double>>& axes) {
  std::vector<ParamSet> out{ParamSet{}};
  for (const auto& [key, values] : axes) {
    if (values.empty())
      throw std::invalid_argument("grid axis '" + key + "' has no values");
    std::vector<ParamSet> next;
    next.reserve(out.size() * values.size());
    for (const auto& base : out)
      for (double v : values) {
        ParamSet p = base;
        p[key] = v;
        next.push_back(std::move(p));
      }
    out = std::move(next);
  }
  return out;
}

std::vector<GridResult> grid_search(
    const std::vector<ParamSet>& lattice,
    const std::function<RegretSeries(const ParamSet&)>& run, unsigned threads) {
  std::vector<GridResult> results(lattice.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < lattice.size(); i = cursor++) {
      GridResult& r = results[i];
      r.index = i;
      r.params = lattice[i];
      try {
        r.r_T = run(lattice[i]).r_T;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(lattice.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const GridResult& a, const GridResult& b) {
                     if (a.ok != b.ok) return a.ok;
                     if (a.ok && a.r_T != b.r_T) return a.r_T < b.r_T;
                     return a.index < b.index;
                   });
  return results;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace

void emit_csv(const RegretSeries& series, std::ostream& os) {
  os << "t,regret,regret_over_log_t\n";
  for (const auto& cp : series.checkpoints)
    os << cp.t << ',' << fmt(cp.regret) << ',' << fmt(cp.regret_over_log_t) << '\n';
}

void emit_csv(const std::vector<GridResult>& grid, std::ostream& os) {
  std::vector<std::string> keys;
  for (const auto& r : grid)
    for (const auto& [k, v] : r.params)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  for (const auto& k : keys) os << k << ',';
  os << "r_T\n";
  for (const auto& r : grid) {
    for (const auto& k : keys) {
      auto it = r.params.find(k);
      os << (it == r.params.end() ? std::string() : fmt(it->second)) << ',';
    }
    os << (r.ok ? fmt(r.r_T) : std::string("nan")) << '\n';
  }
}

void emit_csv(const RegretSeries& series, const std::string& path) {
  auto os = open_out(path);
  emit_csv(series, os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

void emit_csv(const std::vector<GridResult>& grid, const std::string& path) {
  auto os = open_out(path);
  emit_csv(grid, os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<Checkpoint> read_series_csv(std::istream& is) {
  std::vector<Checkpoint> out;
  std::string line;
  if (!std::getline(is, line) || line != "t,regret,regret_over_log_t")
    throw std::invalid_argument("unexpected regret CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Checkpoint cp;
    char c1 = 0, c2 = 0;
    ss >> cp.t >> c1 >> cp.regret >> c2 >> cp.regret_over_log_t;
    if (!ss || c1 != ',' || c2 != ',')
      throw std::invalid_argument("malformed regret CSV row: " + line);
    out.push_back(cp);
  }
  return out;
}

}  // namespace margauss
