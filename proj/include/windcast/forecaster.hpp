#pragma once

// LSTM power forecaster: 1-2 stacked LSTM layers, dropout, dense(1) head.

#include <openssl/sha.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "windcast/error.hpp"
#include "windcast/metrics.hpp"
#include "windcast/nn/lstm.hpp"
#include "windcast/nn/optimizer.hpp"
#include "windcast/rng.hpp"
#include "windcast/scada.hpp"

namespace windcast {

using nn::Matrix;
using json = nlohmann::json;

struct ForecasterConfig {
  ModelVariant variant = ModelVariant::M1;
  std::size_t horizon = 1;
  std::size_t lookback = 6;
  int num_layers = 1;
  int hidden1 = 100;
  int hidden2 = 100;  // ignored when num_layers == 1
  int batch_size = 512;
  double learning_rate = 1e-3;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  int max_epochs = 100;
  int early_stop_patience = 5;
  double dropout_rate = 0.2;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_layers != 1 && num_layers != 2) throw Error(ErrorKind::parameter, "num_layers must be 1 or 2");
    if (hidden1 < 1 || (num_layers == 2 && hidden2 < 1))
      throw Error(ErrorKind::parameter, "hidden sizes must be >= 1");
    if (batch_size < 128 || batch_size > 2048)
      throw Error(ErrorKind::parameter, "batch_size must lie in [128, 2048]");
    if (!(learning_rate >= 1e-5 && learning_rate <= 1e-1))
      throw Error(ErrorKind::parameter, "learning_rate must lie in [1e-5, 1e-1]");
    if (max_epochs < 1) throw Error(ErrorKind::parameter, "max_epochs must be >= 1");
    if (early_stop_patience < 1) throw Error(ErrorKind::parameter, "early_stop_patience must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw Error(ErrorKind::parameter, "dropout_rate must lie in [0, 1)");
    if (!(clip_norm > 0.0)) throw Error(ErrorKind::parameter, "clip_norm must be positive");
    if (lookback < 1 || horizon < 1) throw Error(ErrorKind::parameter, "lookback and horizon must be >= 1");
  }
};

inline json to_json(const ForecasterConfig& c) {
  return json{{"variant", variant_name(c.variant)},
              {"horizon", c.horizon},
              {"lookback", c.lookback},
              {"num_layers", c.num_layers},
              {"hidden1", c.hidden1},
              {"hidden2", c.hidden2},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"optimizer", nn::to_string(c.optimizer)},
              {"max_epochs", c.max_epochs},
              {"early_stop_patience", c.early_stop_patience},
              {"dropout_rate", c.dropout_rate},
              {"clip_norm", c.clip_norm},
              {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ForecasterConfig forecaster_config_from_json(const json& j, ForecasterConfig c = {}) {
  if (!j.is_object()) throw Error(ErrorKind::usage, "forecaster config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "variant") c.variant = variant_from_name(v.get<std::string>());
      else if (key == "horizon") c.horizon = v.get<std::size_t>();
      else if (key == "lookback") c.lookback = v.get<std::size_t>();
      else if (key == "num_layers") c.num_layers = v.get<int>();
      else if (key == "hidden1") c.hidden1 = v.get<int>();
      else if (key == "hidden2") c.hidden2 = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "optimizer") c.optimizer = nn::optimizer_from_string(v.get<std::string>());
      else if (key == "max_epochs") c.max_epochs = v.get<int>();
      else if (key == "early_stop_patience") c.early_stop_patience = v.get<int>();
      else if (key == "dropout_rate") c.dropout_rate = v.get<double>();
      else if (key == "clip_norm") c.clip_norm = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw Error(ErrorKind::usage, "unknown forecaster key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::usage, std::string("bad forecaster config: ") + e.what());
  }
  return c;
}

/// Stacked LSTM layers followed by a single linear output unit.
struct Network {
  std::vector<nn::LstmCellParams> layers;
  Matrix dense_w;  // 1 x hidden of the last layer
  Matrix dense_b;  // 1 x 1

  std::vector<Matrix*> parameters() {
    std::vector<Matrix*> out;
    for (auto& l : layers) {
      out.push_back(&l.w);
      out.push_back(&l.u);
      out.push_back(&l.b);
    }
    out.push_back(&dense_w);
    out.push_back(&dense_b);
    return out;
  }
};

inline Network init_network(const ForecasterConfig& cfg, std::size_t input_dim, Rng& rng) {
  Network net;
  int in = static_cast<int>(input_dim);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const int h = l == 0 ? cfg.hidden1 : cfg.hidden2;
    net.layers.push_back(nn::init_lstm(h, in, rng));
    in = h;
  }
  const double lim = std::sqrt(6.0 / (in + 1));
  net.dense_w = Matrix(1, in);
  for (Eigen::Index j = 0; j < in; ++j) net.dense_w(0, j) = uniform(rng, -lim, lim);
  net.dense_b = Matrix::Zero(1, 1);
  return net;
}

/// One (input_dim x batch) matrix per time step for the chosen samples.
inline std::vector<Matrix> gather_steps(const Windows& w, std::span<const std::size_t> samples) {
  std::vector<Matrix> xs(w.lookback, Matrix(static_cast<Eigen::Index>(w.input_dim),
                                            static_cast<Eigen::Index>(samples.size())));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double* base = w.values.data() + samples[j] * w.lookback * w.input_dim;
    for (std::size_t t = 0; t < w.lookback; ++t)
      for (std::size_t d = 0; d < w.input_dim; ++d)
        xs[t](static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) = base[t * w.input_dim + d];
  }
  return xs;
}

/// Network output (1 x batch) with dropout disabled.
inline Matrix network_predict(const Network& net, std::vector<Matrix> xs) {
  for (const auto& layer : net.layers) {
    auto seq = nn::lstm_forward(layer, xs);
    xs = std::move(seq.h);
  }
  Matrix y = net.dense_w * xs.back();
  y.array() += net.dense_b(0, 0);
  return y;
}

namespace detail {

struct BatchPass {
  double loss = 0.0;
  std::vector<Matrix> grads;  // aligned with Network::parameters()
};

/// MSE loss and its gradient for one batch. `masks[l]` holds per-step dropout
/// masks applied to layer l's output (empty = no dropout).
inline BatchPass loss_and_gradients(const Network& net, const std::vector<Matrix>& xs,
                                    const Matrix& targets,
                                    const std::vector<std::vector<Matrix>>& masks) {
  const std::size_t n_layers = net.layers.size();
  std::vector<nn::SequenceResult> seqs;
  seqs.reserve(n_layers);
  std::vector<Matrix> input = xs;
  for (std::size_t l = 0; l < n_layers; ++l) {
    seqs.push_back(nn::lstm_forward(net.layers[l], input));
    input = seqs.back().h;
    if (!masks.empty() && !masks[l].empty()) {
      const bool last = l + 1 == n_layers;
      for (std::size_t t = 0; t < input.size(); ++t) {
        if (last && t + 1 != input.size()) continue;
        input[t].array() *= masks[l][t].array();
      }
    }
  }
  const Matrix& top = input.back();
  Matrix y = net.dense_w * top;
  y.array() += net.dense_b(0, 0);
  const double batch = static_cast<double>(targets.cols());
  const Matrix diff = y - targets;

  BatchPass out;
  out.loss = diff.squaredNorm() / batch;
  const Matrix dy = (2.0 / batch) * diff;
  Matrix dw = dy * top.transpose();
  Matrix db(1, 1);
  db(0, 0) = dy.sum();

  std::vector<Matrix> layer_grads(3 * n_layers);
  Matrix dh_top = net.dense_w.transpose() * dy;
  std::vector<Matrix> dh(xs.size());
  dh.back() = std::move(dh_top);
  for (std::size_t l = n_layers; l-- > 0;) {
    if (!masks.empty() && !masks[l].empty())
      for (std::size_t t = 0; t < dh.size(); ++t)
        if (dh[t].size() != 0) dh[t].array() *= masks[l][t].array();
    auto g = nn::lstm_backward(net.layers[l], seqs[l].caches, std::span<const Matrix>(dh));
    layer_grads[3 * l] = std::move(g.params.w);
    layer_grads[3 * l + 1] = std::move(g.params.u);
    layer_grads[3 * l + 2] = std::move(g.params.b);
    dh = std::move(g.dx);
  }
  out.grads = std::move(layer_grads);
  out.grads.push_back(std::move(dw));
  out.grads.push_back(std::move(db));
  return out;
}

}  // namespace detail

struct TrainingHistory {
  std::vector<double> train_loss;  // mean mini-batch MSE (dropout active)
  std::vector<double> val_rmse;
};

struct TrainedForecaster {
  ForecasterConfig config;
  Network network;
  NormStats norm_stats;
  TrainingHistory history;
  int best_epoch = -1;  // 0-based index into history
  double best_val_rmse = std::numeric_limits<double>::infinity();

  std::size_t input_dim() const { return windcast::input_dim(config.variant); }

  /// Normalized predictions for `samples` of `w` (all samples when empty).
  std::vector<double> predict(const Windows& w, std::span<const std::size_t> samples = {}) const {
    if (w.lookback != config.lookback || w.input_dim != input_dim())
      throw Error(ErrorKind::dimension,
                  "windows are " + std::to_string(w.lookback) + "x" + std::to_string(w.input_dim) +
                      ", model expects " + std::to_string(config.lookback) + "x" +
                      std::to_string(input_dim()));
    std::vector<std::size_t> all;
    if (samples.empty()) {
      all.resize(w.count);
      std::iota(all.begin(), all.end(), std::size_t{0});
      samples = all;
    }
    std::vector<double> out;
    out.reserve(samples.size());
    constexpr std::size_t chunk = 2048;
    for (std::size_t s = 0; s < samples.size(); s += chunk) {
      const auto part = samples.subspan(s, std::min(chunk, samples.size() - s));
      const Matrix y = network_predict(network, gather_steps(w, part));
      out.insert(out.end(), y.data(), y.data() + y.size());
    }
    return out;
  }

  /// Predictions mapped back to kW with the stored power range.
  std::vector<double> predict_kw(const Windows& w, std::span<const std::size_t> samples = {}) const {
    return inverse_normalize(predict(w, samples), norm_stats.at(Feature::power));
  }
};

inline std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> idx) {
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = values[idx[k]];
  return out;
}

/// Mini-batch training with early stopping on validation RMSE. The returned
/// weights are those of the best validation epoch.
inline TrainedForecaster train(const ForecasterConfig& cfg, const SupervisedSet& data) {
  cfg.validate();
  if (data.split.train.empty() || data.split.validation.empty() || data.split.test.empty())
    throw Error(ErrorKind::insufficient_data, "every split must be non-empty");
  if (data.variant != cfg.variant || data.lookback != cfg.lookback || data.horizon != cfg.horizon)
    throw Error(ErrorKind::dimension, "supervised set does not match the forecaster config");

  TrainedForecaster model;
  model.config = cfg;
  model.norm_stats = data.norm_stats;
  Rng init_rng = make_rng(cfg.seed, 0x1417);
  Rng rng = make_rng(cfg.seed, 0x7EA1);
  model.network = init_network(cfg, data.inputs.input_dim, init_rng);

  Network& net = model.network;
  nn::Optimizer opt(cfg.optimizer, cfg.learning_rate);
  std::vector<std::size_t> order = data.split.train;
  const std::vector<double> val_targets = gather(data.targets, data.split.validation);
  Network best = net;
  int since_best = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::span<const std::size_t> batch(order.data() + start, std::min(bs, order.size() - start));
        const auto xs = gather_steps(data.inputs, batch);
        Matrix targets(1, static_cast<Eigen::Index>(batch.size()));
        for (std::size_t j = 0; j < batch.size(); ++j)
          targets(0, static_cast<Eigen::Index>(j)) = data.targets[batch[j]];

        std::vector<std::vector<Matrix>> masks;
        if (cfg.dropout_rate > 0.0) {
          masks.resize(net.layers.size());
          for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const bool last = l + 1 == net.layers.size();
            masks[l].resize(xs.size());
            for (std::size_t t = last ? xs.size() - 1 : 0; t < xs.size(); ++t)
              masks[l][t] = nn::dropout_mask(net.layers[l].hidden_size,
                                             static_cast<Eigen::Index>(batch.size()), cfg.dropout_rate, rng);
          }
        }
        auto pass = detail::loss_and_gradients(net, xs, targets, masks);
        if (!std::isfinite(pass.loss)) throw DivergedTraining(epoch, "non-finite training loss");
        nn::clip_global_norm(pass.grads, cfg.clip_norm);
        const auto params = net.parameters();
        opt.step(params, pass.grads);
        loss_sum += pass.loss * static_cast<double>(batch.size());
      }
    } catch (const DivergedTraining&) {
      throw;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;
      throw DivergedTraining(epoch, e.what());
    }
    model.history.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

    double val_rmse = 0.0;
    try {
      const auto pred = model.predict(data.inputs, data.split.validation);
      val_rmse = compute_metrics(pred, val_targets).rmse;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;
      throw DivergedTraining(epoch, e.what());
    }
    if (!std::isfinite(val_rmse)) throw DivergedTraining(epoch, "non-finite validation RMSE");
    model.history.val_rmse.push_back(val_rmse);
    if (val_rmse < model.best_val_rmse) {
      model.best_val_rmse = val_rmse;
      model.best_epoch = epoch;
      best = net;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  model.network = std::move(best);
  return model;
}

struct MetricReport {
  SplitMetrics train;
  SplitMetrics validation;
  SplitMetrics test;
  double test_rmse_kw = 0.0;
  double power_span_kw = 0.0;
};

inline MetricReport evaluate(const TrainedForecaster& model, const SupervisedSet& data) {
  if (data.split.test.empty()) throw Error(ErrorKind::empty_data, "test split is empty");
  MetricReport r;
  auto score = [&](const std::vector<std::size_t>& idx) {
    return compute_metrics(model.predict(data.inputs, idx), gather(data.targets, idx));
  };
  if (!data.split.train.empty()) r.train = score(data.split.train);
  if (!data.split.validation.empty()) r.validation = score(data.split.validation);
  r.test = score(data.split.test);
  r.power_span_kw = model.norm_stats.at(Feature::power).span();
  r.test_rmse_kw = r.test.rmse * r.power_span_kw;
  return r;
}

/// Naive persistence: the target is predicted by the last observed power.
inline SplitMetrics persistence_metrics(const SupervisedSet& data, const std::vector<std::size_t>& idx) {
  return compute_metrics(gather(data.last_power, idx), gather(data.targets, idx));
}

inline json to_json(const SplitMetrics& m) {
  json j{{"mse", m.mse}, {"rmse", m.rmse}, {"mae", m.mae}, {"n", m.n}};
  j["r"] = m.r ? json(*m.r) : json(nullptr);
  return j;
}

inline json to_json(const MetricReport& r) {
  return json{{"train", to_json(r.train)},
              {"validation", to_json(r.validation)},
              {"test", to_json(r.test)},
              {"test_rmse_kw", r.test_rmse_kw},
              {"power_span_kw", r.power_span_kw}};
}

/// One row per split x metric; R is written as "undefined" when absent.
inline void write_metrics_csv(std::ostream& out, const MetricReport& r) {
  out << "split,metric,value\n";
  out << std::setprecision(17);
  auto rows = [&](const char* split, const SplitMetrics& m) {
    out << split << ",mse," << m.mse << '\n' << split << ",rmse," << m.rmse << '\n';
    out << split << ",mae," << m.mae << '\n' << split << ",r,";
    if (m.r) out << *m.r; else out << "undefined";
    out << '\n';
  };
  rows("train", r.train);
  rows("validation", r.validation);
  rows("test", r.test);
  out << "test,rmse_kw," << r.test_rmse_kw << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  std::ostringstream os;
  for (unsigned char c : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  return os.str();
}

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows)
    throw Error(ErrorKind::integrity, "matrix row count does not match its header");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = data.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorKind::integrity, "matrix column count does not match its header");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

inline json weights_to_json(const Network& net) {
  json layers = json::array();
  for (const auto& l : net.layers)
    layers.push_back(json{{"hidden_size", l.hidden_size},
                          {"input_size", l.input_size},
                          {"w", matrix_to_json(l.w)},
                          {"u", matrix_to_json(l.u)},
                          {"b", matrix_to_json(l.b)}});
  return json{{"layers", std::move(layers)},
              {"dense_w", matrix_to_json(net.dense_w)},
              {"dense_b", matrix_to_json(net.dense_b)}};
}

}  // namespace detail

inline json to_json(const NormStats& s) {
  json j = json::object();
  for (const auto& [f, r] : s.ranges) j[feature_name(f)] = json{{"min", r.min}, {"max", r.max}};
  return j;
}

inline NormStats norm_stats_from_json(const json& j) {
  NormStats s;
  for (const auto& [key, v] : j.items()) {
    const auto f = feature_from_name(key);
    if (!f) throw Error(ErrorKind::integrity, "unknown feature '" + key + "' in norm stats");
    s.ranges[*f] = FeatureRange{v.at("min").get<double>(), v.at("max").get<double>()};
  }
  return s;
}

inline json checkpoint_json(const TrainedForecaster& m) {
  json weights = detail::weights_to_json(m.network);
  const std::string digest = sha256_hex(weights.dump());
  return json{{"format_version", kCheckpointVersion},
              {"config", to_json(m.config)},
              {"norm_stats", to_json(m.norm_stats)},
              {"history", json{{"train_loss", m.history.train_loss}, {"val_rmse", m.history.val_rmse}}},
              {"best_epoch", m.best_epoch},
              {"best_val_rmse", m.best_val_rmse},
              {"weights", std::move(weights)},
              {"weights_sha256", digest}};
}

inline TrainedForecaster forecaster_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version"))
    throw Error(ErrorKind::integrity, "checkpoint has no format_version");
  const json& ver = j.at("format_version");
  if (!ver.is_number_integer() || ver.get<int>() != kCheckpointVersion)
    throw Error(ErrorKind::unsupported_version,
                "checkpoint format_version " + ver.dump() + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  try {
    const json& weights = j.at("weights");
    if (sha256_hex(weights.dump()) != j.at("weights_sha256").get<std::string>())
      throw Error(ErrorKind::integrity, "checkpoint weights fail the sha256 check");
    TrainedForecaster m;
    m.config = forecaster_config_from_json(j.at("config"));
    m.norm_stats = norm_stats_from_json(j.at("norm_stats"));
    m.history.train_loss = j.at("history").at("train_loss").get<std::vector<double>>();
    m.history.val_rmse = j.at("history").at("val_rmse").get<std::vector<double>>();
    m.best_epoch = j.at("best_epoch").get<int>();
    m.best_val_rmse = j.at("best_val_rmse").get<double>();
    for (const json& l : weights.at("layers")) {
      nn::LstmCellParams p;
      p.hidden_size = l.at("hidden_size").get<int>();
      p.input_size = l.at("input_size").get<int>();
      p.w = detail::matrix_from_json(l.at("w"));
      p.u = detail::matrix_from_json(l.at("u"));
      p.b = detail::matrix_from_json(l.at("b"));
      if (!p.shapes_consistent()) throw Error(ErrorKind::integrity, "inconsistent layer shapes in checkpoint");
      m.network.layers.push_back(std::move(p));
    }
    m.network.dense_w = detail::matrix_from_json(weights.at("dense_w"));
    m.network.dense_b = detail::matrix_from_json(weights.at("dense_b"));
    if (static_cast<int>(m.network.layers.size()) != m.config.num_layers ||
        m.network.layers.front().input_size != static_cast<int>(m.input_dim()) ||
        m.network.dense_w.cols() != m.network.layers.back().hidden_size)
      throw Error(ErrorKind::integrity, "checkpoint weights do not match its config");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::integrity, std::string("malformed checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::usage) throw Error(ErrorKind::integrity, e.what());
    throw;
  }
}

inline void save(const TrainedForecaster& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write checkpoint '" + path + "'");
  out << checkpoint_json(m).dump(1) << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing checkpoint '" + path + "'");
}

inline TrainedForecaster load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::integrity, "checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return forecaster_from_json(j);
}

}  // namespace windcast
