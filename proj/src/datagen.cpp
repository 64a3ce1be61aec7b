#include "margauss/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "margauss/approx_math.hpp"

namespace margauss {

namespace {

constexpr std::uint64_t kWeightStream = 1;
constexpr std::uint64_t kFeatureStream = 2;
constexpr std::uint64_t kLabelStream = 3;

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view s, const char* what) {
  s = trim(s);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument(std::string("malformed ") + what + ": '" +
                                std::string(s) + "'");
  return value;
}

}  // namespace

GenKind parse_gen_kind(std::string_view s) {
  if (s == "random_binary") return GenKind::random_binary;
  if (s == "random_uniform") return GenKind::random_uniform;
  if (s == "categorical" || s == "categorical_zipf") return GenKind::categorical;
  throw std::invalid_argument("unknown generator kind '" + std::string(s) + "'");
}

std::string to_string(GenKind kind) {
  switch (kind) {
    case GenKind::random_binary: return "random_binary";
    case GenKind::random_uniform: return "random_uniform";
    case GenKind::categorical: return "categorical";
  }
  return "?";
}

std::size_t GenConfig::dimension() const {
  if (kind == GenKind::categorical)
    return std::accumulate(category_sizes.begin(), category_sizes.end(),
                           std::size_t{0});
  return d;
}

void GenConfig::validate() const {
  if (!(weight_std >= 0.0) || !std::isfinite(weight_std))
    throw std::invalid_argument("weight_std must be finite and >= 0");
  if (kind == GenKind::categorical) {
    if (category_sizes.empty())
      throw std::invalid_argument("categorical generator needs category sizes");
    for (auto n : category_sizes) {
      if (n < 1) throw std::invalid_argument("category sizes must be >= 1");
      if (draws_per_category > n)
        throw std::invalid_argument("draws per category exceed category size");
    }
    if (selector == CategorySelector::zipf && !(zipf_exponent > 1.0))
      throw std::invalid_argument("zipf exponent must be > 1");
    if (selector == CategorySelector::geometric &&
        !(geometric_ratio > 0.0 && geometric_ratio < 1.0))
      throw std::invalid_argument("geometric ratio must be in (0, 1)");
    if (!category_weight_stds.empty() &&
        category_weight_stds.size() != category_sizes.size())
      throw std::invalid_argument("one weight std per category expected");
  } else {
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("alpha must lie in [0, 1]");
  }
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double TrueModel::score(const SparseExample& ex) const {
  double s = 0.0;
  for (const auto& f : ex.features) s += f.value * weights.at(f.id);
  return s;
}

TrueModel gen_true_model(const GenConfig& cfg) {
  cfg.validate();
  TrueModel model{cfg, std::vector<double>(cfg.dimension(), 0.0)};
  std::mt19937_64 rng(substream_seed(cfg.seed, kWeightStream));
  std::normal_distribution<double> normal;
  if (cfg.kind == GenKind::categorical && !cfg.category_weight_stds.empty()) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < cfg.category_sizes.size(); ++c)
      for (std::size_t j = 0; j < cfg.category_sizes[c]; ++j)
        model.weights[k++] = cfg.category_weight_stds[c] * normal(rng);
  } else {
    for (double& w : model.weights) w = cfg.weight_std * normal(rng);
  }
  return model;
}

double comparator_loss(double score, int y) { return softplus(-y * score); }

double comparator_loss(const TrueModel& model, const SparseExample& ex) {
  return comparator_loss(model.score(ex), ex.label);
}

FiniteSampler::FiniteSampler(std::vector<double> weights) : cdf_(std::move(weights)) {
  if (cdf_.empty()) throw std::invalid_argument("empty sampler");
  std::partial_sum(cdf_.begin(), cdf_.end(), cdf_.begin());
  const double total = cdf_.back();
  if (!(total > 0.0)) throw std::invalid_argument("sampler weights sum to zero");
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

FiniteSampler FiniteSampler::zipf(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = std::pow(static_cast<double>(k + 1), -exponent);
  return FiniteSampler(std::move(w));
}

FiniteSampler FiniteSampler::geometric(std::size_t n, double ratio) {
  std::vector<double> w(n);
  double v = 1.0;
  for (std::size_t k = 0; k < n; ++k, v *= ratio) w[k] = v;
  return FiniteSampler(std::move(w));
}

double FiniteSampler::probability(std::size_t k) const {
  return k == 0 ? cdf_[0] : cdf_[k] - cdf_[k - 1];
}

std::size_t FiniteSampler::operator()(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

StreamGenerator::StreamGenerator(TrueModel model)
    : model_(std::move(model)),
      feature_rng_(substream_seed(model_.config.seed, kFeatureStream)),
      label_rng_(substream_seed(model_.config.seed, kLabelStream)) {
  const GenConfig& cfg = model_.config;
  cfg.validate();
  if (model_.weights.size() != cfg.dimension())
    throw std::invalid_argument("weight vector does not match generator size");
  if (cfg.kind == GenKind::categorical) {
    FeatureId offset = 0;
    for (auto n : cfg.category_sizes) {
      offsets_.push_back(offset);
      offset += n;
      samplers_.push_back(cfg.selector == CategorySelector::zipf
                              ? FiniteSampler::zipf(n, cfg.zipf_exponent)
                              : FiniteSampler::geometric(n, cfg.geometric_ratio));
    }
  }
}

void StreamGenerator::draw_random(SparseExample& ex) {
  const GenConfig& cfg = model_.config;
  if (cfg.alpha <= 0.0) return;
  const bool uniform = cfg.kind == GenKind::random_uniform;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (cfg.alpha >= 1.0) {
    for (std::size_t i = 0; i < cfg.d; ++i)
      ex.features.push_back({i, uniform ? 1.0 - unit(feature_rng_) : 1.0});
    return;
  }
  // Gaps between successive active features are geometric.
  std::geometric_distribution<std::size_t> gap(cfg.alpha);
  std::size_t i = gap(feature_rng_);
  while (i < cfg.d) {
    ex.features.push_back({i, uniform ? 1.0 - unit(feature_rng_) : 1.0});
    i += 1 + gap(feature_rng_);
  }
}

void StreamGenerator::draw_categorical(SparseExample& ex) {
  const std::size_t k = model_.config.draws_per_category;
  for (std::size_t c = 0; c < samplers_.size(); ++c) {
    const std::size_t first = ex.features.size();
    while (ex.features.size() - first < k) {
      const FeatureId id = offsets_[c] + samplers_[c](feature_rng_);
      const bool repeat =
          std::any_of(ex.features.begin() + static_cast<std::ptrdiff_t>(first),
                      ex.features.end(), [&](const Feature& f) { return f.id == id; });
      if (!repeat) ex.features.push_back({id, 1.0});
    }
  }
}

SparseExample StreamGenerator::next() {
  SparseExample ex;
  if (model_.config.kind == GenKind::categorical) {
    draw_categorical(ex);
  } else {
    draw_random(ex);
  }
  const double p = sigmoid(model_.score(ex));
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(label_rng_);
  ex.label = u < p ? 1 : -1;
  return ex;
}

std::string format_example(const SparseExample& ex) {
  std::string out = ex.label > 0 ? "1\t" : "-1\t";
  for (std::size_t k = 0; k < ex.features.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(ex.features[k].id);
    out += ':';
    append_double(out, ex.features[k].value);
  }
  return out;
}

SparseExample parse_example(std::string_view line) {
  line = trim(line);
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos)
    throw std::invalid_argument("replay line lacks a tab after the label");
  SparseExample ex;
  ex.label = normalize_label(parse_number<int>(line.substr(0, tab), "label"));
  std::string_view rest = line.substr(tab + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("feature entry must be id:value, got '" +
                                  std::string(item) + "'");
    ex.features.push_back({parse_number<FeatureId>(item.substr(0, colon), "feature id"),
                           parse_number<double>(item.substr(colon + 1), "value")});
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  validate(ex);
  return ex;
}

void write_stream(std::ostream& os, const std::vector<SparseExample>& examples) {
  for (const auto& ex : examples) os << format_example(ex) << '\n';
}

void write_weights(std::ostream& os, const std::vector<double>& weights) {
  std::string line;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    line = std::to_string(i);
    line += '\t';
    append_double(line, weights[i]);
    os << line << '\n';
  }
}

std::unordered_map<FeatureId, double> read_weights(std::istream& is) {
  std::unordered_map<FeatureId, double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    const auto tab = s.find('\t');
    if (tab == std::string_view::npos)
      throw std::invalid_argument("weights line " + std::to_string(lineno) +
                                  ": expected id<TAB>weight");
    out[parse_number<FeatureId>(s.substr(0, tab), "feature id")] =
        parse_number<double>(s.substr(tab + 1), "weight");
  }
  return out;
}

}  // namespace margauss
