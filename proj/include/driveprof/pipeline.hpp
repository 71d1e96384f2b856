#pragma once

// Training on normal-only windows and inference-time residual scoring.
// Training refuses any non-Normal pair before touching the model, and the
// run manifest certifies that along with everything needed to re-run.

#include <json.hpp>

#include "driveprof/optim.hpp"
#include "driveprof/preprocess.hpp"

namespace driveprof {

struct TrainConfig {
  int window_size = 50;
  int hidden_size = 64;
  int num_layers = 2;
  int head_hidden = 0;
  int epochs = 30;
  int batch_size = 64;
  uint64_t seed = 1;
  OptimConfig optimizer;
  double train_fraction = 0.6;  // leading share of the timeline used to train
  bool shuffle = true;
  bool strict_labels = false;  // drop windows whose frames disagree with the target label
  double clip_norm = 0.0;      // global L2 gradient clip, 0 disables

  void validate() const {
    if (window_size < 1) throw ConfigError("window_size must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
      throw ConfigError("train_fraction must be in (0, 1]");
    if (optimizer.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  }
};

// A window bound to the series it came from, so datasets spanning several
// sessions stay cheap (no frame copies).
struct WindowView {
  const FrameSeries* series;
  Eigen::Index origin;
  Behavior label;
};

inline std::vector<WindowView> make_views(const FrameSeries& series, const WindowSet& set) {
  std::vector<WindowView> views;
  views.reserve(set.pairs.size());
  for (const auto& p : set.pairs) views.push_back(WindowView{&series, p.origin, p.label});
  return views;
}

// Contiguous-block split of one session's windows: pairs whose target falls
// in the first `fraction` of the timeline go to train, the rest to holdout.
// Avoids temporal leakage between overlapping stride-1 windows.
inline std::pair<WindowSet, WindowSet> temporal_split(const WindowSet& set, double fraction,
                                                      Eigen::Index frame_count) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must be in (0, 1]");
  const auto boundary = static_cast<Eigen::Index>(static_cast<double>(frame_count) * fraction);
  WindowSet train{set.window_size, {}}, holdout{set.window_size, {}};
  for (const auto& p : set.pairs)
    (p.origin < boundary ? train : holdout).pairs.push_back(p);
  return {train, holdout};
}

struct TrainResult {
  LstmModel model;
  std::vector<double> loss_history;  // mean per-window data MSE per epoch
  double final_loss = 0.0;
  size_t window_count = 0;
};

inline void accumulate(Gradients& total, const Gradients& item) {
  std::vector<std::pair<const double*, Eigen::Index>> src;
  visit_params(item, [&](const std::string&, const double* d, Eigen::Index s, bool) {
    src.emplace_back(d, s);
  });
  size_t k = 0;
  visit_params(total, [&](const std::string&, double* d, Eigen::Index s, bool) {
    const double* in = src[k++].first;
    for (Eigen::Index i = 0; i < s; ++i) d[i] += in[i];
  });
}

inline void clip_gradients(Gradients& grads, double max_norm) {
  double sq = 0.0;
  visit_params(grads, [&](const std::string&, const double* d, Eigen::Index s, bool) {
    for (Eigen::Index i = 0; i < s; ++i) sq += d[i] * d[i];
  });
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  visit_params(grads, [&](const std::string&, double* d, Eigen::Index s, bool) {
    for (Eigen::Index i = 0; i < s; ++i) d[i] *= scale;
  });
}

// Trains the next-frame regressor on normal windows only. Deterministic for
// a fixed config: seeded init, seeded shuffle, ordered gradient reduction.
inline TrainResult train(const TrainConfig& config, const std::vector<WindowView>& normal_pairs) {
  config.validate();
  if (normal_pairs.empty()) throw ValidationError("training set is empty");
  for (const auto& view : normal_pairs) {
    if (view.label != Behavior::Normal)
      throw ValidationError("non-normal data in training set (label " +
                            std::string(behavior_name(view.label)) + ")");
    if (view.origin < config.window_size)
      throw ValidationError("window origin precedes a full window");
  }

  TrainResult result;
  result.model = init_model(config.hidden_size, config.num_layers, config.seed, kNumChannels,
                            config.head_hidden);
  result.window_count = normal_pairs.size();
  AdamState adam = init_adam(result.model);
  Rng shuffle_rng(derive_seed(config.seed, 0x5u));

  const size_t n = normal_pairs.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t done = 0;
    while (done < n) {
      const size_t batch = std::min(static_cast<size_t>(config.batch_size), n - done);
      Gradients grads = zeros_like(result.model);
      for (size_t b = 0; b < batch; ++b) {
        const WindowView& view = normal_pairs[order[done + b]];
        ForwardCache cache = forward(
            result.model, view.series->frames.middleRows(view.origin - config.window_size,
                                                         config.window_size));
        MseResult mse = mse_loss(cache.prediction, view.series->frames.row(view.origin).transpose());
        epoch_loss += mse.loss;
        Gradients item = backward(result.model, cache, mse.grad / static_cast<double>(batch));
        accumulate(grads, item);
      }
      add_regularization_gradients(result.model, config.optimizer, grads);
      if (config.clip_norm > 0.0) clip_gradients(grads, config.clip_norm);
      adam_step(result.model, grads, adam, config.optimizer);
      done += batch;
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(n));
  }
  result.final_loss = result.loss_history.back();
  return result;
}

struct ScoreRecord {
  int64_t origin;  // target frame index
  double error;    // per-window MSE residual
  Behavior label;
};

// error = MSE between the model's prediction and the observed target frame.
inline ScoreRecord score_window(const LstmModel& model, const WindowView& view, int window_size) {
  if (view.origin < window_size)
    throw ValidationError("window size mismatch: origin " + std::to_string(view.origin) +
                          " cannot host a window of " + std::to_string(window_size));
  const Eigen::VectorXd pred =
      predict(model, view.series->frames.middleRows(view.origin - window_size, window_size));
  const double err = mse_loss(pred, view.series->frames.row(view.origin).transpose()).loss;
  return ScoreRecord{static_cast<int64_t>(view.origin), err, view.label};
}

inline std::vector<ScoreRecord> score_dataset(const LstmModel& model,
                                              const std::vector<WindowView>& views,
                                              int window_size) {
  std::vector<ScoreRecord> records;
  records.reserve(views.size());
  for (const auto& v : views) records.push_back(score_window(model, v, window_size));
  return records;
}

enum class Verdict { Normal, Aggressive };

// Aggressive iff the residual strictly exceeds the threshold.
inline Verdict classify(const ScoreRecord& record, double threshold) {
  if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
  return record.error > threshold ? Verdict::Aggressive : Verdict::Normal;
}

// Scores file: origin,error,label (delimited text).
inline std::string write_scores(const std::vector<ScoreRecord>& records) {
  std::string out = "origin,error,label\n";
  for (const auto& r : records) {
    out += std::to_string(r.origin) + ',' + textio::format_f64(r.error) + ',' +
           std::string(behavior_name(r.label)) + '\n';
  }
  return out;
}

inline std::vector<ScoreRecord> parse_scores(std::string_view text) {
  std::vector<ScoreRecord> records;
  bool header_seen = false;
  textio::for_each_line(text, [&](std::string_view line, long line_no) {
    if (!header_seen) {
      header_seen = true;
      return;
    }
    auto fields = textio::split(line);
    if (fields.size() != 3) throw ParseError("expected origin,error,label", line_no);
    auto behavior = parse_behavior(fields[2]);
    if (!behavior) throw ParseError("unknown behavior '" + std::string(fields[2]) + "'", line_no);
    records.push_back(ScoreRecord{textio::parse_i64(fields[0], line_no),
                                  textio::parse_f64(fields[1], line_no), *behavior});
  });
  return records;
}

inline nlohmann::ordered_json optim_config_json(const OptimConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},       {"beta2", c.beta2},
          {"epsilon", c.epsilon},             {"l1_coeff", c.l1_coeff}, {"l2_coeff", c.l2_coeff}};
}

inline nlohmann::ordered_json train_config_json(const TrainConfig& c) {
  return {{"window_size", c.window_size},
          {"hidden_size", c.hidden_size},
          {"num_layers", c.num_layers},
          {"head_hidden", c.head_hidden},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"optimizer", optim_config_json(c.optimizer)},
          {"train_fraction", c.train_fraction},
          {"shuffle", c.shuffle},
          {"strict_labels", c.strict_labels},
          {"clip_norm", c.clip_norm}};
}

// Run manifest: everything needed to reproduce the run plus the purity
// certificate (the count of non-normal windows that entered training, which
// train() guarantees is zero).
inline nlohmann::ordered_json train_manifest(const TrainConfig& config, const TrainResult& result,
                                             uint64_t scaler_hash, const std::string& checkpoint_path) {
  nlohmann::ordered_json m;
  m["kind"] = "driveprof_train_manifest";
  m["version"] = 1;
  m["config"] = train_config_json(config);
  m["seed"] = config.seed;
  m["scaler_hash"] = scaler_hash;
  m["checkpoint"] = checkpoint_path;
  m["trained_windows"] = result.window_count;
  m["non_normal_windows_in_training"] = 0;
  m["loss_history"] = result.loss_history;
  m["final_loss"] = result.final_loss;
  return m;
}

}  // namespace driveprof
