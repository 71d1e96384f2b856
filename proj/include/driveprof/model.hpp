#pragma once

// Stacked LSTM with a dense regression head: maps a W x 12 sequence to the
// predicted next 12-dim frame. Forward caches every activation needed by
// backward, which computes exact gradients through all timesteps and layers.

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "driveprof/core.hpp"

namespace driveprof {

enum Gate { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };
inline constexpr std::array<const char*, 4> kGateNames = {"i", "f", "g", "o"};

struct LstmLayer {
  std::array<Eigen::MatrixXd, 4> w_in;   // hidden x in_dim
  std::array<Eigen::MatrixXd, 4> w_rec;  // hidden x hidden
  std::array<Eigen::VectorXd, 4> bias;   // hidden
};

struct LstmModel {
  int input_size = kNumChannels;
  int hidden_size = 0;
  int num_layers = 0;
  int head_hidden = 0;  // 0 = single dense head, >0 inserts a tanh dense layer
  std::vector<LstmLayer> layers;
  Eigen::MatrixXd head_mid_w;  // head_hidden x hidden (only when head_hidden > 0)
  Eigen::VectorXd head_mid_b;  // head_hidden
  Eigen::MatrixXd head_w;      // input_size x (head_hidden > 0 ? head_hidden : hidden)
  Eigen::VectorXd head_b;      // input_size
};

// Gradients share the parameter layout of the model itself.
using Gradients = LstmModel;

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename ModelT, typename Fn>
void visit_params(ModelT& model, Fn&& fn) {
  for (size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (int g = 0; g < 4; ++g)
      fn(prefix + "w_in." + kGateNames[static_cast<size_t>(g)], layer.w_in[static_cast<size_t>(g)].data(),
         layer.w_in[static_cast<size_t>(g)].size(), true);
    for (int g = 0; g < 4; ++g)
      fn(prefix + "w_rec." + kGateNames[static_cast<size_t>(g)], layer.w_rec[static_cast<size_t>(g)].data(),
         layer.w_rec[static_cast<size_t>(g)].size(), true);
    for (int g = 0; g < 4; ++g)
      fn(prefix + "bias." + kGateNames[static_cast<size_t>(g)], layer.bias[static_cast<size_t>(g)].data(),
         layer.bias[static_cast<size_t>(g)].size(), false);
  }
  if (model.head_hidden > 0) {
    fn(std::string("head_mid.w"), model.head_mid_w.data(), model.head_mid_w.size(), true);
    fn(std::string("head_mid.b"), model.head_mid_b.data(), model.head_mid_b.size(), false);
  }
  fn(std::string("head.w"), model.head_w.data(), model.head_w.size(), true);
  fn(std::string("head.b"), model.head_b.data(), model.head_b.size(), false);
}

}  // namespace detail

// Visits every parameter tensor in canonical order (the checkpoint order):
// fn(name, data pointer, element count, is_weight).
template <typename Fn>
void visit_params(LstmModel& model, Fn&& fn) {
  detail::visit_params(model, std::forward<Fn>(fn));
}
template <typename Fn>
void visit_params(const LstmModel& model, Fn&& fn) {
  detail::visit_params(model, std::forward<Fn>(fn));
}

inline size_t param_count(const LstmModel& model) {
  size_t n = 0;
  visit_params(model, [&](const std::string&, const double*, Eigen::Index size, bool) {
    n += static_cast<size_t>(size);
  });
  return n;
}

inline int layer_input_size(const LstmModel& model, int layer) {
  return layer == 0 ? model.input_size : model.hidden_size;
}

inline LstmModel zeros_like(const LstmModel& model) {
  LstmModel z = model;
  visit_params(z, [](const std::string&, double* data, Eigen::Index size, bool) {
    std::fill(data, data + size, 0.0);
  });
  return z;
}

// Seeded uniform init in [-1/sqrt(hidden), +1/sqrt(hidden)]; forget-gate
// biases start at 1.0, every other bias at 0.
inline LstmModel init_model(int hidden_size, int num_layers, uint64_t seed,
                            int input_size = kNumChannels, int head_hidden = 0) {
  if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (input_size < 1) throw ConfigError("input_size must be >= 1");
  if (head_hidden < 0) throw ConfigError("head_hidden must be >= 0");

  LstmModel model;
  model.input_size = input_size;
  model.hidden_size = hidden_size;
  model.num_layers = num_layers;
  model.head_hidden = head_hidden;
  model.layers.resize(static_cast<size_t>(num_layers));
  for (int l = 0; l < num_layers; ++l) {
    auto& layer = model.layers[static_cast<size_t>(l)];
    const int in = layer_input_size(model, l);
    for (int g = 0; g < 4; ++g) {
      layer.w_in[static_cast<size_t>(g)].resize(hidden_size, in);
      layer.w_rec[static_cast<size_t>(g)].resize(hidden_size, hidden_size);
      layer.bias[static_cast<size_t>(g)] = Eigen::VectorXd::Zero(hidden_size);
    }
    layer.bias[kGateForget].setOnes();
  }
  const int head_in = head_hidden > 0 ? head_hidden : hidden_size;
  if (head_hidden > 0) {
    model.head_mid_w.resize(head_hidden, hidden_size);
    model.head_mid_b = Eigen::VectorXd::Zero(head_hidden);
  }
  model.head_w.resize(input_size, head_in);
  model.head_b = Eigen::VectorXd::Zero(input_size);

  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  visit_params(model, [&](const std::string&, double* data, Eigen::Index size, bool is_weight) {
    if (!is_weight) return;  // biases keep their fixed init
    for (Eigen::Index i = 0; i < size; ++i) data[i] = rng.uniform(-bound, bound);
  });
  return model;
}

struct LayerCache {
  std::array<Eigen::MatrixXd, 4> gates;  // hidden x W each; gate g column t
  Eigen::MatrixXd cell;                  // hidden x W
  Eigen::MatrixXd cell_tanh;             // hidden x W
  Eigen::MatrixXd hidden;                // hidden x W
};

struct ForwardCache {
  int input_size = 0;
  int hidden_size = 0;
  int num_layers = 0;
  int head_hidden = 0;
  Eigen::MatrixXd input;  // W x input_size (copy; layer-0 weight grads need it)
  std::vector<LayerCache> layers;
  Eigen::VectorXd head_mid;    // tanh activations of the optional dense layer
  Eigen::VectorXd prediction;  // 12
};

inline void check_input_shape(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& input) {
  if (input.cols() != model.input_size)
    throw ValidationError("input width " + std::to_string(input.cols()) + " != model input size " +
                          std::to_string(model.input_size));
  if (input.rows() < 1) throw ValidationError("input sequence is empty");
}

// Full forward pass with cache; initial hidden and cell states are zero.
inline ForwardCache forward(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& input) {
  check_input_shape(model, input);
  const auto steps = input.rows();
  const int h = model.hidden_size;

  ForwardCache cache;
  cache.input_size = model.input_size;
  cache.hidden_size = h;
  cache.num_layers = model.num_layers;
  cache.head_hidden = model.head_hidden;
  cache.input = input;
  cache.layers.resize(static_cast<size_t>(model.num_layers));

  Eigen::VectorXd x, pre;
  for (int l = 0; l < model.num_layers; ++l) {
    const auto& layer = model.layers[static_cast<size_t>(l)];
    auto& lc = cache.layers[static_cast<size_t>(l)];
    for (auto& g : lc.gates) g.resize(h, steps);
    lc.cell.resize(h, steps);
    lc.cell_tanh.resize(h, steps);
    lc.hidden.resize(h, steps);

    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    for (Eigen::Index t = 0; t < steps; ++t) {
      if (l == 0)
        x = input.row(t).transpose();
      else
        x = cache.layers[static_cast<size_t>(l - 1)].hidden.col(t);

      for (int g = 0; g < 4; ++g) {
        pre = layer.w_in[static_cast<size_t>(g)] * x + layer.w_rec[static_cast<size_t>(g)] * h_prev +
              layer.bias[static_cast<size_t>(g)];
        if (g == kGateCell)
          lc.gates[static_cast<size_t>(g)].col(t) = pre.array().tanh();
        else
          lc.gates[static_cast<size_t>(g)].col(t) =
              pre.unaryExpr([](double v) { return detail::sigmoid(v); });
      }
      lc.cell.col(t) = lc.gates[kGateForget].col(t).cwiseProduct(c_prev) +
                       lc.gates[kGateInput].col(t).cwiseProduct(lc.gates[kGateCell].col(t));
      lc.cell_tanh.col(t) = lc.cell.col(t).array().tanh();
      lc.hidden.col(t) = lc.gates[kGateOutput].col(t).cwiseProduct(lc.cell_tanh.col(t));
      h_prev = lc.hidden.col(t);
      c_prev = lc.cell.col(t);
    }
  }

  const Eigen::VectorXd& h_last =
      cache.layers[static_cast<size_t>(model.num_layers - 1)].hidden.col(steps - 1);
  if (model.head_hidden > 0) {
    cache.head_mid = (model.head_mid_w * h_last + model.head_mid_b).array().tanh();
    cache.prediction = model.head_w * cache.head_mid + model.head_b;
  } else {
    cache.prediction = model.head_w * h_last + model.head_b;
  }
  return cache;
}

// Cache-free forward for scoring; must match forward() bit for bit.
inline Eigen::VectorXd predict(const LstmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& input) {
  check_input_shape(model, input);
  const auto steps = input.rows();
  const int h = model.hidden_size;
  const auto layers = static_cast<size_t>(model.num_layers);

  std::vector<Eigen::VectorXd> h_state(layers, Eigen::VectorXd::Zero(h));
  std::vector<Eigen::VectorXd> c_state(layers, Eigen::VectorXd::Zero(h));
  Eigen::VectorXd x, pre, gate_i, gate_f, gate_g, gate_o;
  for (Eigen::Index t = 0; t < steps; ++t) {
    x = input.row(t).transpose();
    for (size_t l = 0; l < layers; ++l) {
      const auto& layer = model.layers[l];
      gate_i = (layer.w_in[kGateInput] * x + layer.w_rec[kGateInput] * h_state[l] +
                layer.bias[kGateInput])
                   .unaryExpr([](double v) { return detail::sigmoid(v); });
      gate_f = (layer.w_in[kGateForget] * x + layer.w_rec[kGateForget] * h_state[l] +
                layer.bias[kGateForget])
                   .unaryExpr([](double v) { return detail::sigmoid(v); });
      gate_g = (layer.w_in[kGateCell] * x + layer.w_rec[kGateCell] * h_state[l] +
                layer.bias[kGateCell])
                   .array()
                   .tanh();
      gate_o = (layer.w_in[kGateOutput] * x + layer.w_rec[kGateOutput] * h_state[l] +
                layer.bias[kGateOutput])
                   .unaryExpr([](double v) { return detail::sigmoid(v); });
      c_state[l] = gate_f.cwiseProduct(c_state[l]) + gate_i.cwiseProduct(gate_g);
      h_state[l] = gate_o.cwiseProduct(c_state[l].array().tanh().matrix());
      x = h_state[l];
    }
  }
  if (model.head_hidden > 0) {
    Eigen::VectorXd mid = (model.head_mid_w * h_state[layers - 1] + model.head_mid_b).array().tanh();
    return model.head_w * mid + model.head_b;
  }
  return model.head_w * h_state[layers - 1] + model.head_b;
}

inline void check_cache(const LstmModel& model, const ForwardCache& cache) {
  if (cache.hidden_size != model.hidden_size || cache.num_layers != model.num_layers ||
      cache.input_size != model.input_size || cache.head_hidden != model.head_hidden)
    throw ValidationError("forward cache does not match model dimensions");
}

// Backpropagation through time: gradients of prediction . grad_output with
// respect to every parameter.
inline Gradients backward(const LstmModel& model, const ForwardCache& cache,
                          const Eigen::Ref<const Eigen::VectorXd>& grad_output) {
  check_cache(model, cache);
  if (grad_output.size() != model.input_size)
    throw ValidationError("grad_output size mismatch");

  const auto steps = cache.input.rows();
  const int h = model.hidden_size;
  Gradients grads = zeros_like(model);

  const Eigen::VectorXd& h_last =
      cache.layers[static_cast<size_t>(model.num_layers - 1)].hidden.col(steps - 1);

  // Head.
  Eigen::VectorXd dh_last;
  if (model.head_hidden > 0) {
    grads.head_w = grad_output * cache.head_mid.transpose();
    grads.head_b = grad_output;
    Eigen::VectorXd d_mid = model.head_w.transpose() * grad_output;
    Eigen::VectorXd d_mid_pre =
        d_mid.cwiseProduct((1.0 - cache.head_mid.array().square()).matrix());
    grads.head_mid_w = d_mid_pre * h_last.transpose();
    grads.head_mid_b = d_mid_pre;
    dh_last = model.head_mid_w.transpose() * d_mid_pre;
  } else {
    grads.head_w = grad_output * h_last.transpose();
    grads.head_b = grad_output;
    dh_last = model.head_w.transpose() * grad_output;
  }

  // dh_out[t]: gradient flowing into h_t of the current layer from outside
  // (the head for the top layer, the layer above otherwise).
  Eigen::MatrixXd dh_out = Eigen::MatrixXd::Zero(h, steps);
  dh_out.col(steps - 1) = dh_last;

  Eigen::VectorXd dh(h), dc(h), d_pre[4], x_t;
  for (int l = model.num_layers - 1; l >= 0; --l) {
    const auto& layer = model.layers[static_cast<size_t>(l)];
    const auto& lc = cache.layers[static_cast<size_t>(l)];
    auto& glayer = grads.layers[static_cast<size_t>(l)];
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(layer_input_size(model, l), steps);

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      const auto gate_i = lc.gates[kGateInput].col(t);
      const auto gate_f = lc.gates[kGateForget].col(t);
      const auto gate_g = lc.gates[kGateCell].col(t);
      const auto gate_o = lc.gates[kGateOutput].col(t);
      const auto tanh_c = lc.cell_tanh.col(t);

      dh = dh_out.col(t) + dh_next;
      dc = dh.cwiseProduct(gate_o)
               .cwiseProduct((1.0 - tanh_c.array().square()).matrix()) +
           dc_next;

      d_pre[kGateOutput] = dh.cwiseProduct(tanh_c)
                               .cwiseProduct(gate_o)
                               .cwiseProduct((1.0 - gate_o.array()).matrix());
      d_pre[kGateInput] = dc.cwiseProduct(gate_g)
                              .cwiseProduct(gate_i)
                              .cwiseProduct((1.0 - gate_i.array()).matrix());
      const Eigen::VectorXd c_prev =
          t > 0 ? Eigen::VectorXd(lc.cell.col(t - 1)) : Eigen::VectorXd::Zero(h);
      d_pre[kGateForget] = dc.cwiseProduct(c_prev)
                               .cwiseProduct(gate_f)
                               .cwiseProduct((1.0 - gate_f.array()).matrix());
      d_pre[kGateCell] =
          dc.cwiseProduct(gate_i).cwiseProduct((1.0 - gate_g.array().square()).matrix());

      if (l == 0)
        x_t = cache.input.row(t).transpose();
      else
        x_t = cache.layers[static_cast<size_t>(l - 1)].hidden.col(t);
      const Eigen::VectorXd h_prev =
          t > 0 ? Eigen::VectorXd(lc.hidden.col(t - 1)) : Eigen::VectorXd::Zero(h);

      dh_next.setZero();
      for (int g = 0; g < 4; ++g) {
        glayer.w_in[static_cast<size_t>(g)].noalias() += d_pre[g] * x_t.transpose();
        glayer.w_rec[static_cast<size_t>(g)].noalias() += d_pre[g] * h_prev.transpose();
        glayer.bias[static_cast<size_t>(g)] += d_pre[g];
        dx.col(t).noalias() += layer.w_in[static_cast<size_t>(g)].transpose() * d_pre[g];
        dh_next.noalias() += layer.w_rec[static_cast<size_t>(g)].transpose() * d_pre[g];
      }
      dc_next = dc.cwiseProduct(gate_f);
    }
    dh_out = std::move(dx);  // feeds the layer below
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Checkpoint format (little-endian binary):
//   magic "DRVPROF1" | u32 version=1 | u32 input | u32 hidden | u32 layers |
//   u32 head_hidden | parameter tensors as raw f64 in canonical visit order.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'D', 'R', 'V', 'P', 'R', 'O', 'F', '1'};
inline constexpr uint32_t kCheckpointVersion = 1;

inline std::string checkpoint_bytes(const LstmModel& model) {
  std::string out;
  out.reserve(40 + param_count(model) * sizeof(double));
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  auto put_u32 = [&](uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put_u32(kCheckpointVersion);
  put_u32(static_cast<uint32_t>(model.input_size));
  put_u32(static_cast<uint32_t>(model.hidden_size));
  put_u32(static_cast<uint32_t>(model.num_layers));
  put_u32(static_cast<uint32_t>(model.head_hidden));
  visit_params(model, [&](const std::string&, const double* data, Eigen::Index size, bool) {
    out.append(reinterpret_cast<const char*>(data), static_cast<size_t>(size) * sizeof(double));
  });
  return out;
}

inline LstmModel parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 28 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw ValidationError("not a driveprof checkpoint");
  size_t off = 8;
  auto get_u32 = [&]() {
    uint32_t v;
    std::memcpy(&v, bytes.data() + off, sizeof(v));
    off += sizeof(v);
    return v;
  };
  const uint32_t version = get_u32();
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  const auto input = static_cast<int>(get_u32());
  const auto hidden = static_cast<int>(get_u32());
  const auto layers = static_cast<int>(get_u32());
  const auto head_hidden = static_cast<int>(get_u32());

  LstmModel model = init_model(hidden, layers, 0, input, head_hidden);
  bool truncated = false;
  visit_params(model, [&](const std::string&, double* data, Eigen::Index size, bool) {
    const size_t n = static_cast<size_t>(size) * sizeof(double);
    if (off + n > bytes.size()) {
      truncated = true;
      return;
    }
    std::memcpy(data, bytes.data() + off, n);
    off += n;
  });
  if (truncated || off != bytes.size())
    throw ValidationError("checkpoint size does not match its header dimensions");
  return model;
}

inline void save_checkpoint(const LstmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
  const std::string bytes = checkpoint_bytes(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline LstmModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace driveprof
