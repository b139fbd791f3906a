#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rampcast/error.hpp"
#include "rampcast/power.hpp"

namespace rampcast::power {

namespace {

using Row = std::array<double, kFeatureCount>;

std::vector<double> make_edges(std::vector<double> col, int max_bins) {
  std::sort(col.begin(), col.end());
  std::vector<double> uniq = col;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> edges;
  if (uniq.size() <= std::size_t(max_bins)) {
    for (std::size_t i = 1; i < uniq.size(); ++i) edges.push_back(0.5 * (uniq[i - 1] + uniq[i]));
    return edges;
  }
  for (int b = 1; b < max_bins; ++b) {
    const double v = col[std::size_t(b) * col.size() / std::size_t(max_bins)];
    const auto next = std::upper_bound(uniq.begin(), uniq.end(), v);
    if (next == uniq.end()) break;
    const double e = 0.5 * (v + *next);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

struct Binned {
  std::array<std::vector<double>, kFeatureCount> edges;
  std::array<std::vector<std::uint16_t>, kFeatureCount> bins;  // per training sample
};

Binned bin_features(std::span<const Row> rows, int max_bins) {
  Binned b;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::vector<double> col(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][f];
    b.edges[f] = make_edges(col, max_bins);
    b.bins[f].resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      b.bins[f][i] = std::uint16_t(std::upper_bound(b.edges[f].begin(), b.edges[f].end(), col[i]) - b.edges[f].begin());
  }
  return b;
}

class TreeBuilder {
 public:
  TreeBuilder(const Binned& data, std::span<const double> grad, const GbrtConfig& cfg)
      : data_(data), grad_(grad), cfg_(cfg) {}

  RegressionTree build(std::vector<std::uint32_t> idx) {
    tree_.nodes.clear();
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::uint32_t>& idx, int depth) {
    double g = 0.0;
    for (auto i : idx) g += grad_[i];
    const double h = double(idx.size());
    const int id = int(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[std::size_t(id)].value = -g / (h + cfg_.lambda) * cfg_.learning_rate;
    if (depth >= cfg_.max_depth || h < 2.0 * cfg_.min_child_weight) return id;

    const double parent = g * g / (h + cfg_.lambda);
    double best_gain = 1e-12;
    int best_f = -1;
    std::size_t best_b = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const std::size_t nb = data_.edges[f].size() + 1;
      if (nb < 2) continue;
      hist_g_.assign(nb, 0.0);
      hist_h_.assign(nb, 0.0);
      for (auto i : idx) {
        hist_g_[data_.bins[f][i]] += grad_[i];
        hist_h_[data_.bins[f][i]] += 1.0;
      }
      double gl = 0.0, hl = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hist_g_[b];
        hl += hist_h_[b];
        const double hr = h - hl;
        if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) continue;
        const double gr = g - gl;
        const double gain = gl * gl / (hl + cfg_.lambda) + gr * gr / (hr + cfg_.lambda) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = int(f);
          best_b = b;
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<std::uint32_t> left, right;
    for (auto i : idx) (data_.bins[std::size_t(best_f)][i] <= best_b ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree_.nodes[std::size_t(id)];
    node.feature = best_f;
    node.threshold = data_.edges[std::size_t(best_f)][best_b];
    node.left = l;
    node.right = r;
    node.value = 0.0;
    return id;
  }

  const Binned& data_;
  std::span<const double> grad_;
  const GbrtConfig& cfg_;
  RegressionTree tree_;
  std::vector<double> hist_g_, hist_h_;
};

double nrmse_clipped(std::span<const double> pred, std::span<const double> y, double p95) {
  if (y.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = std::max(0.0, pred[i]) - y[i];
    s += e * e;
  }
  return std::sqrt(s / double(y.size())) / p95;
}

}  // namespace

void GbrtConfig::validate() const {
  if (trees < 1 || max_depth < 1 || !(learning_rate > 0.0) || !(subsample > 0.0 && subsample <= 1.0) ||
      patience < 1 || !(lambda >= 0.0) || !(min_child_weight >= 0.0) || max_bins < 2 || max_bins > 65535 ||
      !(validation_fraction >= 0.0 && validation_fraction < 1.0))
    fail(Errc::ConfigError, "invalid gradient boosting configuration");
}

const std::array<std::string, kFeatureCount>& FeatureVector::names() {
  static const std::array<std::string, kFeatureCount> n{"ssi", "sza", "azi", "hod_sin", "hod_cos", "doy_sin", "doy_cos"};
  return n;
}

double RegressionTree::predict(std::span<const double> x) const noexcept {
  if (nodes.empty()) return 0.0;
  std::size_t i = 0;
  while (nodes[i].feature >= 0) i = std::size_t(x[std::size_t(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left : nodes[i].right);
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  if (!nodes.empty()) stack.push_back({0, 0});
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.push_back({std::size_t(nodes[i].left), d + 1});
      stack.push_back({std::size_t(nodes[i].right), d + 1});
    }
  }
  return best;
}

double StationPowerModel::raw(const FeatureVector& f) const noexcept {
  const auto x = f.as_array();
  double s = base_score;
  for (const auto& t : trees) s += t.predict(x);
  return s;
}

double predict_power(const StationPowerModel& model, const FeatureVector& f) noexcept {
  return std::max(0.0, model.raw(f));
}

StationPowerModel train_station_model(const std::string& station_id, std::span<const FeatureVector> features,
                                      std::span<const double> targets_kw, double p95_kw, const GbrtConfig& hyper) {
  hyper.validate();
  if (features.size() != targets_kw.size()) fail(Errc::InvalidArgument, "feature/target count mismatch");
  if (!(p95_kw > 0.0)) fail(Errc::InvalidArgument, "station " + station_id + " needs a positive P95");
  std::size_t daytime = 0;
  for (const auto& f : features)
    if (f.sza < 90.0) ++daytime;
  if (daytime < hyper.min_daytime_samples)
    fail(Errc::InsufficientData, "station " + station_id + " has " + std::to_string(daytime) +
                                     " daytime samples, needs " + std::to_string(hyper.min_daytime_samples));
  for (double y : targets_kw)
    if (!std::isfinite(y)) fail(Errc::InvalidArgument, "training targets must be finite");

  const std::size_t n = features.size();
  const std::size_t n_val = std::size_t(std::floor(double(n) * hyper.validation_fraction));
  const std::size_t n_train = n - n_val;
  std::vector<Row> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = features[i].as_array();
  const std::span<const Row> train_rows(rows.data(), n_train);
  const std::span<const double> y_train = targets_kw.subspan(0, n_train);
  const std::span<const double> y_val = targets_kw.subspan(n_train);

  StationPowerModel model;
  model.station_id = station_id;
  model.p95_kw = p95_kw;
  model.hyper = hyper;
  model.base_score = std::accumulate(y_train.begin(), y_train.end(), 0.0) / double(n_train);

  const Binned binned = bin_features(train_rows, hyper.max_bins);
  std::vector<double> pred_train(n_train, model.base_score), pred_val(n_val, model.base_score);
  std::vector<double> grad(n_train);
  std::mt19937_64 rng(hyper.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double best = std::numeric_limits<double>::infinity();
  int best_iter = 0;
  for (int t = 0; t < hyper.trees; ++t) {
    for (std::size_t i = 0; i < n_train; ++i) grad[i] = pred_train[i] - y_train[i];
    std::vector<std::uint32_t> idx;
    idx.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i)
      if (hyper.subsample >= 1.0 || unit(rng) < hyper.subsample) idx.push_back(std::uint32_t(i));
    if (idx.empty()) idx.push_back(0);

    TreeBuilder builder(binned, grad, hyper);
    RegressionTree tree = builder.build(std::move(idx));
    for (std::size_t i = 0; i < n_train; ++i) pred_train[i] += tree.predict(rows[i]);
    for (std::size_t i = 0; i < n_val; ++i) pred_val[i] += tree.predict(rows[n_train + i]);
    model.trees.push_back(std::move(tree));

    if (n_val == 0) {
      best_iter = t + 1;
      continue;
    }
    const double score = nrmse_clipped(pred_val, y_val, p95_kw);
    if (score < best) {
      best = score;
      best_iter = t + 1;
    } else if (t + 1 - best_iter >= hyper.patience) {
      break;
    }
  }
  model.trees.resize(std::size_t(best_iter));

  std::vector<double> final_train(n_train), final_val(n_val);
  for (std::size_t i = 0; i < n_train; ++i) final_train[i] = model.raw(features[i]);
  for (std::size_t i = 0; i < n_val; ++i) final_val[i] = model.raw(features[n_train + i]);
  model.summary.samples = n;
  model.summary.train_samples = n_train;
  model.summary.validation_samples = n_val;
  model.summary.daytime_samples = daytime;
  model.summary.train_nrmse = nrmse_clipped(final_train, y_train, p95_kw);
  model.summary.validation_nrmse = nrmse_clipped(final_val, y_val, p95_kw);
  model.summary.best_iteration = best_iter;
  return model;
}

}  // namespace rampcast::power
