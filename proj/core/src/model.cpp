#include "fedsel/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fedsel/errors.hpp"

namespace fedsel {
namespace {

// Flat layout: softmax = [W (F x C), b (C)];
// hidden    = [W1 (F x H), b1 (H), W2 (H x C), b2 (C)], all row-major.

void check_shapes(const ModelParams& params, const Dataset& data) {
  if (params.spec.n_features != data.n_features) {
    throw ShapeMismatch("feature width differs from model spec");
  }
  if (params.values.size() != params.spec.param_count()) {
    throw ShapeMismatch("parameter vector length differs from spec");
  }
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= params.spec.n_classes) {
      throw ShapeMismatch("label outside the model's class range");
    }
  }
}

/// Stable softmax of `logits` in place; returns log(sum(exp)) + max for the
/// cross-entropy term.
void softmax_inplace(std::vector<double>& logits, double& log_norm) {
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max_logit);
    sum += z;
  }
  for (double& z : logits) z /= sum;
  log_norm = std::log(sum) + max_logit;
}

struct Workspace {
  std::vector<double> hidden;
  std::vector<double> probs;
};

/// Forward pass for one sample; fills probs (and hidden when present) and
/// returns the cross-entropy loss -log p[y].
double forward(const ModelParams& params, std::span<const double> x, int label,
               Workspace& ws) {
  const ModelSpec& s = params.spec;
  const double* v = params.values.data();
  double log_norm = 0.0;
  if (s.hidden_units == 0) {
    const double* weight = v;
    const double* bias = v + s.n_features * s.n_classes;
    ws.probs.assign(bias, bias + s.n_classes);
    for (std::size_t f = 0; f < s.n_features; ++f) {
      const double xf = x[f];
      const double* wrow = weight + f * s.n_classes;
      for (std::size_t c = 0; c < s.n_classes; ++c) ws.probs[c] += xf * wrow[c];
    }
    double logit_y = ws.probs[static_cast<std::size_t>(label)];
    softmax_inplace(ws.probs, log_norm);
    return log_norm - logit_y;
  }

  const std::size_t F = s.n_features, H = s.hidden_units, C = s.n_classes;
  const double* w1 = v;
  const double* b1 = v + F * H;
  const double* w2 = b1 + H;
  const double* b2 = w2 + H * C;

  ws.hidden.assign(b1, b1 + H);
  for (std::size_t f = 0; f < F; ++f) {
    const double xf = x[f];
    const double* wrow = w1 + f * H;
    for (std::size_t h = 0; h < H; ++h) ws.hidden[h] += xf * wrow[h];
  }
  for (double& h : ws.hidden) h = std::tanh(h);

  ws.probs.assign(b2, b2 + C);
  for (std::size_t h = 0; h < H; ++h) {
    const double hv = ws.hidden[h];
    const double* wrow = w2 + h * C;
    for (std::size_t c = 0; c < C; ++c) ws.probs[c] += hv * wrow[c];
  }
  double logit_y = ws.probs[static_cast<std::size_t>(label)];
  softmax_inplace(ws.probs, log_norm);
  return log_norm - logit_y;
}

}  // namespace

ModelParams init_params(const ModelSpec& spec, RngStream& rng) {
  if (spec.n_classes < 2) throw ShapeMismatch("model needs at least 2 classes");
  ModelParams params;
  params.spec = spec;
  params.values.assign(spec.param_count(), 0.0);

  auto fill_layer = [&](std::size_t offset, std::size_t fan_in, std::size_t fan_out) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) {
      params.values[offset + i] = rng.uniform(-bound, bound);
    }
  };

  if (spec.hidden_units == 0) {
    fill_layer(0, spec.n_features, spec.n_classes);
  } else {
    fill_layer(0, spec.n_features, spec.hidden_units);
    fill_layer(spec.n_features * spec.hidden_units + spec.hidden_units,
               spec.hidden_units, spec.n_classes);
  }
  return params;
}

LossGrad loss_and_gradient(const ModelParams& params, const Dataset& data,
                           std::span<const std::size_t> batch) {
  if (batch.empty()) throw ShapeMismatch("loss_and_gradient: empty batch");
  check_shapes(params, data);

  const ModelSpec& s = params.spec;
  LossGrad out;
  out.gradient.assign(params.values.size(), 0.0);
  Workspace ws;

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  if (s.hidden_units == 0) {
    const std::size_t F = s.n_features, C = s.n_classes;
    double* g_weight = out.gradient.data();
    double* g_bias = out.gradient.data() + F * C;
    for (std::size_t idx : batch) {
      auto x = data.row(idx);
      int y = data.labels[idx];
      out.loss += forward(params, x, y, ws);
      ws.probs[static_cast<std::size_t>(y)] -= 1.0;  // dL/dz = p - onehot(y)
      for (std::size_t f = 0; f < F; ++f) {
        const double xf = x[f];
        double* grow = g_weight + f * C;
        for (std::size_t c = 0; c < C; ++c) grow[c] += xf * ws.probs[c];
      }
      for (std::size_t c = 0; c < C; ++c) g_bias[c] += ws.probs[c];
    }
  } else {
    const std::size_t F = s.n_features, H = s.hidden_units, C = s.n_classes;
    const double* w2 = params.values.data() + F * H + H;
    double* g_w1 = out.gradient.data();
    double* g_b1 = out.gradient.data() + F * H;
    double* g_w2 = g_b1 + H;
    double* g_b2 = g_w2 + H * C;
    std::vector<double> delta_hidden(H);
    for (std::size_t idx : batch) {
      auto x = data.row(idx);
      int y = data.labels[idx];
      out.loss += forward(params, x, y, ws);
      ws.probs[static_cast<std::size_t>(y)] -= 1.0;
      for (std::size_t h = 0; h < H; ++h) {
        const double hv = ws.hidden[h];
        const double* wrow = w2 + h * C;
        double* grow = g_w2 + h * C;
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          grow[c] += hv * ws.probs[c];
          acc += wrow[c] * ws.probs[c];
        }
        delta_hidden[h] = acc * (1.0 - hv * hv);  // tanh'
      }
      for (std::size_t c = 0; c < C; ++c) g_b2[c] += ws.probs[c];
      for (std::size_t f = 0; f < F; ++f) {
        const double xf = x[f];
        double* grow = g_w1 + f * H;
        for (std::size_t h = 0; h < H; ++h) grow[h] += xf * delta_hidden[h];
      }
      for (std::size_t h = 0; h < H; ++h) g_b1[h] += delta_hidden[h];
    }
  }

  out.loss *= inv_n;
  for (double& g : out.gradient) g *= inv_n;
  return out;
}

ModelParams local_train(const ModelParams& params, const Dataset& data,
                        std::span<const std::size_t> shard, std::uint32_t epochs,
                        double learning_rate, std::uint32_t batch_size,
                        const RngStream& rng) {
  if (shard.empty()) throw ShapeMismatch("local_train: empty shard");
  ModelParams current = params;
  std::vector<std::size_t> order(shard.begin(), shard.end());
  for (std::uint32_t epoch = 0; epoch < epochs; ++epoch) {
    RngStream shuffle_rng = rng.derive("epoch." + std::to_string(epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::size_t end = std::min(order.size(), start + batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      LossGrad lg = loss_and_gradient(current, data, batch);
      for (std::size_t i = 0; i < current.values.size(); ++i) {
        current.values[i] -= learning_rate * lg.gradient[i];
      }
    }
  }
  return current;
}

Evaluation evaluate(const ModelParams& params, const Dataset& data) {
  if (data.n_samples() == 0) throw ShapeMismatch("evaluate: empty dataset");
  check_shapes(params, data);

  const std::size_t C = params.spec.n_classes;
  Evaluation ev;
  ev.class_scores.resize(data.n_samples() * C);
  Workspace ws;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    ev.mean_loss += forward(params, data.row(i), data.labels[i], ws);
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (ws.probs[c] > ws.probs[best]) best = c;  // ties keep the lowest index
    }
    if (best == static_cast<std::size_t>(data.labels[i])) ++correct;
    std::copy(ws.probs.begin(), ws.probs.end(), ev.class_scores.begin() + i * C);
  }
  ev.mean_loss /= static_cast<double>(data.n_samples());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.n_samples());
  return ev;
}

namespace {

constexpr char kBlobMagic[4] = {'F', 'S', 'M', 'P'};
constexpr std::uint32_t kBlobVersion = 1;

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const unsigned char> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<unsigned char> serialize_params(const ModelParams& params) {
  std::vector<unsigned char> out;
  out.reserve(4 + 4 + 8 * 4 + 8 * params.values.size());
  out.insert(out.end(), kBlobMagic, kBlobMagic + 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(kBlobVersion >> (8 * i)));
  put_u64(out, params.spec.n_features);
  put_u64(out, params.spec.n_classes);
  put_u64(out, params.spec.hidden_units);
  put_u64(out, params.values.size());
  for (double v : params.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
  }
  return out;
}

ModelParams deserialize_params(std::span<const unsigned char> bytes) {
  if (bytes.size() < 40) throw Truncated("params blob: shorter than the header");
  if (std::memcmp(bytes.data(), kBlobMagic, 4) != 0) {
    throw BadMagic("params blob: bad magic");
  }
  ModelParams params;
  params.spec.n_features = get_u64(bytes, 8);
  params.spec.n_classes = get_u64(bytes, 16);
  params.spec.hidden_units = get_u64(bytes, 24);
  std::uint64_t count = get_u64(bytes, 32);
  if (count != params.spec.param_count()) {
    throw ShapeMismatch("params blob: count differs from spec");
  }
  if (bytes.size() < 40 + 8 * count) throw Truncated("params blob: values truncated");
  params.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t bits = get_u64(bytes, 40 + 8 * i);
    std::memcpy(&params.values[i], &bits, 8);
  }
  return params;
}

void save_params(const ModelParams& params, const std::string& path) {
  std::vector<unsigned char> bytes = serialize_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return deserialize_params(bytes);
}

}  // namespace fedsel
