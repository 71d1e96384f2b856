#pragma once

// Training objective and updates: mean-squared-error loss over the 12
// features, L1/L2 penalties on weights (biases exempt), Adam with bias
// correction, and a central finite-difference oracle for gradient checks.

#include "driveprof/model.hpp"

namespace driveprof {

struct OptimConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l1_coeff = 1e-5;
  double l2_coeff = 1e-5;
};

struct MseResult {
  double loss;
  Eigen::VectorXd grad;  // d loss / d prediction
};

// loss = mean_j (pred_j - target_j)^2, averaged so the residual scale does
// not depend on the feature count.
inline MseResult mse_loss(const Eigen::Ref<const Eigen::VectorXd>& prediction,
                          const Eigen::Ref<const Eigen::VectorXd>& target) {
  if (prediction.size() != target.size())
    throw ValidationError("mse_loss: length mismatch");
  const auto n = static_cast<double>(prediction.size());
  Eigen::VectorXd diff = prediction - target;
  return MseResult{diff.squaredNorm() / n, (2.0 / n) * diff};
}

// lambda1 * sum|w| + lambda2 * sum w^2 over weight tensors only.
inline double regularization_penalty(const LstmModel& model, const OptimConfig& config) {
  double penalty = 0.0;
  visit_params(model, [&](const std::string&, const double* data, Eigen::Index size, bool is_weight) {
    if (!is_weight) return;
    for (Eigen::Index i = 0; i < size; ++i)
      penalty += config.l1_coeff * std::abs(data[i]) + config.l2_coeff * data[i] * data[i];
  });
  return penalty;
}

inline double regularized_loss(const LstmModel& model, double data_loss, const OptimConfig& config) {
  return data_loss + regularization_penalty(model, config);
}

// Adds the penalty subgradient to the weight gradients: lambda1 * sign(w)
// (sign(0) = 0) plus 2 * lambda2 * w.
inline void add_regularization_gradients(const LstmModel& model, const OptimConfig& config,
                                         Gradients& grads) {
  if (config.l1_coeff == 0.0 && config.l2_coeff == 0.0) return;
  std::vector<std::pair<const double*, Eigen::Index>> weights;
  visit_params(model, [&](const std::string&, const double* data, Eigen::Index size, bool is_weight) {
    if (is_weight) weights.emplace_back(data, size);
  });
  size_t k = 0;
  visit_params(grads, [&](const std::string&, double* gdata, Eigen::Index size, bool is_weight) {
    if (!is_weight) return;
    const double* w = weights[k].first;
    for (Eigen::Index i = 0; i < size; ++i) {
      const double sign = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
      gdata[i] += config.l1_coeff * sign + 2.0 * config.l2_coeff * w[i];
    }
    ++k;
  });
}

struct AdamState {
  Gradients m;  // first moments, model-shaped
  Gradients v;  // second moments
  long t = 0;
};

inline AdamState init_adam(const LstmModel& model) {
  return AdamState{zeros_like(model), zeros_like(model), 0};
}

// One Adam update. Rejects non-finite gradients, naming the tensor, and
// guarantees all parameters stay finite.
inline void adam_step(LstmModel& model, const Gradients& grads, AdamState& state,
                      const OptimConfig& config) {
  visit_params(grads, [&](const std::string& name, const double* g, Eigen::Index size, bool) {
    for (Eigen::Index i = 0; i < size; ++i)
      if (!std::isfinite(g[i]))
        throw ValidationError("non-finite gradient in tensor " + name);
  });

  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));

  struct Flat {
    double* data;
    Eigen::Index size;
  };
  std::vector<std::pair<const double*, Eigen::Index>> g_flat;
  std::vector<Flat> m_flat, v_flat;
  visit_params(grads, [&](const std::string&, const double* d, Eigen::Index s, bool) {
    g_flat.emplace_back(d, s);
  });
  visit_params(state.m,
               [&](const std::string&, double* d, Eigen::Index s, bool) { m_flat.push_back({d, s}); });
  visit_params(state.v,
               [&](const std::string&, double* d, Eigen::Index s, bool) { v_flat.push_back({d, s}); });

  size_t k = 0;
  visit_params(model, [&](const std::string& name, double* w, Eigen::Index size, bool) {
    double* m = m_flat[k].data;
    double* v = v_flat[k].data;
    const double* g = g_flat[k].first;
    for (Eigen::Index i = 0; i < size; ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
      if (!std::isfinite(w[i]))
        throw ValidationError("non-finite parameter after update in tensor " + name);
    }
    ++k;
  });
}

// Full objective at the current parameters: data MSE plus penalties.
inline double full_objective(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& input,
                             const Eigen::Ref<const Eigen::VectorXd>& target,
                             const OptimConfig& config) {
  const Eigen::VectorXd pred = predict(model, input);
  return regularized_loss(model, mse_loss(pred, target).loss, config);
}

// Central differences (f(w+h) - f(w-h)) / 2h on the full regularized loss.
// Verification oracle; O(param_count) forward passes, tiny models only.
inline Gradients finite_diff_gradients(const LstmModel& model,
                                       const Eigen::Ref<const Eigen::MatrixXd>& input,
                                       const Eigen::Ref<const Eigen::VectorXd>& target,
                                       const OptimConfig& config, double step = 1e-5) {
  LstmModel work = model;
  Gradients grads = zeros_like(model);

  struct Flat {
    double* data;
    Eigen::Index size;
  };
  std::vector<Flat> w_flat, g_flat;
  visit_params(work, [&](const std::string&, double* d, Eigen::Index s, bool) { w_flat.push_back({d, s}); });
  visit_params(grads, [&](const std::string&, double* d, Eigen::Index s, bool) { g_flat.push_back({d, s}); });

  for (size_t k = 0; k < w_flat.size(); ++k) {
    for (Eigen::Index i = 0; i < w_flat[k].size; ++i) {
      double& w = w_flat[k].data[i];
      const double saved = w;
      w = saved + step;
      const double up = full_objective(work, input, target, config);
      w = saved - step;
      const double down = full_objective(work, input, target, config);
      w = saved;
      g_flat[k].data[i] = (up - down) / (2.0 * step);
    }
  }
  return grads;
}

// Analytic gradient of the same full objective, for symmetry with the
// oracle: BPTT through the data term plus the penalty subgradient.
inline Gradients analytic_gradients(const LstmModel& model,
                                    const Eigen::Ref<const Eigen::MatrixXd>& input,
                                    const Eigen::Ref<const Eigen::VectorXd>& target,
                                    const OptimConfig& config) {
  ForwardCache cache = forward(model, input);
  MseResult mse = mse_loss(cache.prediction, target);
  Gradients grads = backward(model, cache, mse.grad);
  add_regularization_gradients(model, config, grads);
  return grads;
}

}  // namespace driveprof
