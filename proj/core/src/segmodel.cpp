#include "tmt/segmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

void init_normal(Matrix& m, double stddev, Rng& rng) {
  for (double& v : m.values()) v = rng.normal(0.0, stddev);
}

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Intermediate values needed by the backward pass.
struct LayerCache {
  Matrix queries_in;  // N × C
  Matrix projected;   // N × C
  AttentionInputs attn;
  AttentionResult attn_out;
  Matrix hidden;      // N × C, after the attention residual
  Matrix ffn_pre;     // N × F
};

struct ForwardCache {
  Matrix patches;     // P × D
  Matrix embedding;   // P × C
  Matrix keys;        // P × C
  Matrix values;      // P × C
  std::vector<LayerCache> layers;
  Matrix final_queries;
  Matrix mask_embed;  // N × C
};

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = matmul(x, w);
  add_row_broadcast(y, b);
  return y;
}

Matrix mask_embedding(const SegModelParams& p, const Matrix& queries) {
  return affine(queries, p.mask_w, p.mask_b);
}

SegPrediction run_forward(const SegModelParams& p, const FeatureMap& fm, const GateOptions& gate,
                          ForwardCache* cache) {
  const SegModelConfig& cfg = p.config;
  if (fm.channels() != cfg.in_channels) {
    throw ShapeError("feature map has " + std::to_string(fm.channels()) + " channels, model expects " +
                     std::to_string(cfg.in_channels));
  }
  const std::size_t pixels = fm.pixels();
  const bool gated = !gate.transferability.empty();
  if (gated && gate.transferability.size() != pixels) {
    throw ShapeError("transferability map does not match the feature map");
  }
  const double lambda_t = gated ? percentile_threshold(gate.transferability, gate.percentile) : 1.0;
  // Ungated runs still need a T vector for the mask; all zeros passes T ≤ 1.
  std::vector<double> open_t;
  std::span<const double> t = gate.transferability;
  if (!gated) {
    open_t.assign(pixels, 0.0);
    t = open_t;
  }

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.patches = extract_patches(fm, cfg.patch_radius);
  c.embedding = affine(c.patches, p.embed_w, p.embed_b);
  c.keys = matmul(c.embedding, p.key_proj);
  c.values = matmul(c.embedding, p.value_proj);
  const Matrix keys_t = transpose(c.keys);

  SegPrediction pred;
  pred.height = fm.height;
  pred.width = fm.width;
  pred.classes = cfg.classes;

  Matrix queries = p.query_init;
  c.layers.clear();
  c.layers.reserve(p.layers.size());
  for (const DecoderLayer& layer : p.layers) {
    LayerCache lc;
    Matrix mask_probs = matmul_nt(mask_embedding(p, queries), c.embedding);
    for (double& v : mask_probs.values()) {
      v = sigmoid(v);
      pred.mask_margin = std::min(pred.mask_margin, std::abs(v - gate.mask_threshold));
    }
    AttentionMask mask = build_mask({std::move(mask_probs), t, gate.mask_threshold, lambda_t});
    pred.fallback_rows += mask.fallback_count();
    pred.mask_rows += mask.fallback.size();

    lc.projected = matmul(queries, layer.query_proj);
    lc.attn.queries = transpose(lc.projected);
    lc.attn.keys = keys_t;
    lc.attn.values = c.values;
    lc.attn_out = tma_attention(lc.attn, mask);

    lc.hidden = queries;
    add_inplace(lc.hidden, lc.attn_out.output);
    lc.ffn_pre = affine(lc.hidden, layer.ffn_w1, layer.ffn_b1);
    Matrix act = lc.ffn_pre;
    for (double& v : act.values()) v = std::max(v, 0.0);
    Matrix next = lc.hidden;
    add_inplace(next, affine(act, layer.ffn_w2, layer.ffn_b2));

    lc.queries_in = std::move(queries);
    queries = std::move(next);
    if (cache) c.layers.push_back(std::move(lc));
  }

  pred.class_logits = affine(queries, p.class_w, p.class_b);
  c.mask_embed = mask_embedding(p, queries);
  pred.mask_logits = matmul_nt(c.mask_embed, c.embedding);
  c.final_queries = std::move(queries);
  finalize_prediction(pred);
  return pred;
}

void relu_backward(Matrix& grad, const Matrix& pre) {
  auto g = grad.values();
  auto z = pre.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (z[i] <= 0.0) g[i] = 0.0;
  }
}

SegModelParams run_backward(const SegModelParams& p, const ForwardCache& c, const SegLoss& loss) {
  SegModelParams g = p.zeros_like();

  // Heads.
  g.class_w = matmul_tn(c.final_queries, loss.d_class_logits);
  g.class_b = column_sums(loss.d_class_logits);
  Matrix d_queries = matmul_nt(loss.d_class_logits, p.class_w);

  Matrix d_mask_embed = matmul(loss.d_mask_logits, c.embedding);     // N × C
  Matrix d_embedding = matmul_tn(loss.d_mask_logits, c.mask_embed);  // P × C
  g.mask_w = matmul_tn(c.final_queries, d_mask_embed);
  g.mask_b = column_sums(d_mask_embed);
  add_inplace(d_queries, matmul_nt(d_mask_embed, p.mask_w));

  Matrix d_keys(c.keys.rows(), c.keys.cols());
  Matrix d_values(c.values.rows(), c.values.cols());

  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const DecoderLayer& layer = p.layers[l];
    const LayerCache& lc = c.layers[l];
    DecoderLayer& gl = g.layers[l];

    // next = hidden + relu(hidden·W1 + b1)·W2 + b2
    Matrix act = lc.ffn_pre;
    for (double& v : act.values()) v = std::max(v, 0.0);
    gl.ffn_w2 = matmul_tn(act, d_queries);
    gl.ffn_b2 = column_sums(d_queries);
    Matrix d_pre = matmul_nt(d_queries, layer.ffn_w2);
    relu_backward(d_pre, lc.ffn_pre);
    gl.ffn_w1 = matmul_tn(lc.hidden, d_pre);
    gl.ffn_b1 = column_sums(d_pre);
    Matrix d_hidden = d_queries;
    add_inplace(d_hidden, matmul_nt(d_pre, layer.ffn_w1));

    // hidden = queries_in + attention(queries_in·Wq, keys, values)
    AttentionGrads ag = tma_attention_backward(lc.attn, lc.attn_out, d_hidden);
    Matrix d_projected = transpose(ag.queries);
    gl.query_proj = matmul_tn(lc.queries_in, d_projected);
    d_queries = std::move(d_hidden);
    add_inplace(d_queries, matmul_nt(d_projected, layer.query_proj));
    add_inplace(d_keys, transpose(ag.keys));
    add_inplace(d_values, ag.values);
  }
  g.query_init = std::move(d_queries);

  g.key_proj = matmul_tn(c.embedding, d_keys);
  g.value_proj = matmul_tn(c.embedding, d_values);
  add_inplace(d_embedding, matmul_nt(d_keys, p.key_proj));
  add_inplace(d_embedding, matmul_nt(d_values, p.value_proj));
  g.embed_w = matmul_tn(c.patches, d_embedding);
  g.embed_b = column_sums(d_embedding);
  return g;
}

}  // namespace

ParamRefs SegModelParams::refs() {
  ParamRefs r{&embed_w, &embed_b, &query_init, &key_proj, &value_proj};
  for (auto& l : layers) {
    r.insert(r.end(), {&l.query_proj, &l.ffn_w1, &l.ffn_b1, &l.ffn_w2, &l.ffn_b2});
  }
  r.insert(r.end(), {&class_w, &class_b, &mask_w, &mask_b});
  return r;
}

ConstParamRefs SegModelParams::refs() const {
  ConstParamRefs r{&embed_w, &embed_b, &query_init, &key_proj, &value_proj};
  for (const auto& l : layers) {
    r.insert(r.end(), {&l.query_proj, &l.ffn_w1, &l.ffn_b1, &l.ffn_w2, &l.ffn_b2});
  }
  r.insert(r.end(), {&class_w, &class_b, &mask_w, &mask_b});
  return r;
}

SegModelParams SegModelParams::zeros_like() const {
  SegModelParams z;
  z.config = config;
  auto zero = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
  z.embed_w = zero(embed_w);
  z.embed_b = zero(embed_b);
  z.query_init = zero(query_init);
  z.key_proj = zero(key_proj);
  z.value_proj = zero(value_proj);
  for (const auto& l : layers) {
    z.layers.push_back({zero(l.query_proj), zero(l.ffn_w1), zero(l.ffn_b1), zero(l.ffn_w2),
                        zero(l.ffn_b2)});
  }
  z.class_w = zero(class_w);
  z.class_b = zero(class_b);
  z.mask_w = zero(mask_w);
  z.mask_b = zero(mask_b);
  return z;
}

SegModelParams make_seg_model(const SegModelConfig& cfg, Rng& rng) {
  if (cfg.layers == 0) throw ConfigError("segmentation model needs at least one decoder layer");
  if (cfg.queries < cfg.classes) throw ConfigError("need at least one query per class");
  if (cfg.channels == 0 || cfg.in_channels == 0 || cfg.classes == 0 || cfg.ffn_hidden == 0) {
    throw ConfigError("segmentation model sizes must be positive");
  }
  const std::size_t c = cfg.channels;
  SegModelParams p;
  p.config = cfg;
  p.embed_w = Matrix(cfg.patch_dim(), c);
  init_normal(p.embed_w, inv_sqrt(cfg.patch_dim()), rng);
  p.embed_b = Matrix(1, c);
  p.query_init = Matrix(cfg.queries, c);
  init_normal(p.query_init, 1.0, rng);
  p.key_proj = Matrix(c, c);
  init_normal(p.key_proj, inv_sqrt(c), rng);
  p.value_proj = Matrix(c, c);
  init_normal(p.value_proj, inv_sqrt(c), rng);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    DecoderLayer layer{Matrix(c, c), Matrix(c, cfg.ffn_hidden), Matrix(1, cfg.ffn_hidden),
                       Matrix(cfg.ffn_hidden, c), Matrix(1, c)};
    init_normal(layer.query_proj, inv_sqrt(c), rng);
    init_normal(layer.ffn_w1, inv_sqrt(c), rng);
    init_normal(layer.ffn_w2, 0.5 * inv_sqrt(cfg.ffn_hidden), rng);
    p.layers.push_back(std::move(layer));
  }
  p.class_w = Matrix(c, cfg.classes + 1);
  init_normal(p.class_w, inv_sqrt(c), rng);
  p.class_b = Matrix(1, cfg.classes + 1);
  p.mask_w = Matrix(c, c);
  init_normal(p.mask_w, inv_sqrt(c), rng);
  p.mask_b = Matrix(1, c);
  return p;
}

Matrix extract_patches(const FeatureMap& fm, std::size_t radius) {
  const std::size_t d = fm.channels();
  if (radius == 0) return fm.features;
  const std::size_t side = 2 * radius + 1;
  Matrix out(fm.pixels(), d * side * side);
  const auto h = static_cast<std::ptrdiff_t>(fm.height);
  const auto w = static_cast<std::ptrdiff_t>(fm.width);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      auto row = out.row(static_cast<std::size_t>(y * w + x));
      std::size_t off = 0;
      for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx, off += d) {
          const std::ptrdiff_t yy = y + dy;
          const std::ptrdiff_t xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          auto src = fm.pixel(static_cast<std::size_t>(yy * w + xx));
          std::copy(src.begin(), src.end(), row.begin() + static_cast<std::ptrdiff_t>(off));
        }
      }
    }
  }
  return out;
}

void finalize_prediction(SegPrediction& pred) {
  const std::size_t k = pred.classes;
  pred.class_probs = softmax_rows(pred.class_logits);
  pred.mask_probs = pred.mask_logits;
  for (double& v : pred.mask_probs.values()) v = sigmoid(v);

  const std::size_t n = pred.class_probs.rows();
  std::vector<double> confidence(n);
  std::vector<int> best_class(n);
  for (std::size_t q = 0; q < n; ++q) {
    auto probs = pred.class_probs.row(q);
    const auto it = std::max_element(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(k));
    confidence[q] = *it;
    best_class[q] = static_cast<int>(it - probs.begin());
  }
  const std::size_t pixels = pred.mask_probs.cols();
  pred.labels.assign(pixels, 0);
  for (std::size_t j = 0; j < pixels; ++j) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const double s = confidence[q] * pred.mask_probs(q, j);
      if (s > best) {
        best = s;
        arg = q;
      }
    }
    pred.labels[j] = best_class[arg];
  }
}

SegPrediction seg_forward(const SegModelParams& params, const FeatureMap& fm,
                          const GateOptions& gate) {
  return run_forward(params, fm, gate, nullptr);
}

SegLoss seg_loss(const SegPrediction& pred, std::span<const int> labels,
                 std::span<const double> pixel_weights) {
  const std::size_t n = pred.class_logits.rows();
  const std::size_t k = pred.classes;
  const std::size_t pixels = pred.mask_logits.cols();
  if (labels.size() != pixels) throw InputError("label map does not match prediction size");
  if (!pixel_weights.empty() && pixel_weights.size() != pixels) {
    throw InputError("pixel weight map does not match prediction size");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) {
      throw InputError("label " + std::to_string(l) + " outside [0, " + std::to_string(k) + ")");
    }
  }

  SegLoss out;
  out.d_class_logits = Matrix(n, k + 1);
  out.d_mask_logits = Matrix(n, pixels);
  const Matrix probs = softmax_rows(pred.class_logits);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t target = q < k ? q : k;
    out.value -= std::log(std::max(probs(q, target), 1e-300));
    for (std::size_t c = 0; c <= k; ++c) {
      out.d_class_logits(q, c) = probs(q, c) - (c == target ? 1.0 : 0.0);
    }
  }
  const double inv_p = 1.0 / static_cast<double>(pixels);
  for (std::size_t q = 0; q < std::min(n, k); ++q) {
    auto z = pred.mask_logits.row(q);
    auto dz = out.d_mask_logits.row(q);
    double sum = 0.0;
    for (std::size_t j = 0; j < pixels; ++j) {
      const double y = labels[j] == static_cast<int>(q) ? 1.0 : 0.0;
      const double w = pixel_weights.empty() ? 1.0 : pixel_weights[j];
      sum += w * (softplus(z[j]) - y * z[j]);
      dz[j] = w * (sigmoid(z[j]) - y) * inv_p;
    }
    out.value += sum * inv_p;
  }
  return out;
}

SegLossAndGrad seg_loss_and_grad(const SegModelParams& params, const FeatureMap& fm,
                                 std::span<const int> labels, const GateOptions& gate,
                                 std::span<const double> pixel_weights) {
  ForwardCache cache;
  SegLossAndGrad out;
  out.prediction = run_forward(params, fm, gate, &cache);
  SegLoss loss = seg_loss(out.prediction, labels, pixel_weights);
  out.loss = loss.value;
  out.grads = run_backward(params, cache, loss);
  return out;
}

TrainResult train(SegModelParams params, const std::vector<TrainSample>& dataset,
                  const TrainConfig& config) {
  if (dataset.empty()) throw InputError("training set is empty");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");

  TrainResult result;
  result.loss_log.reserve(config.steps);
  AdamWState opt(config.optimizer, std::as_const(params).refs());
  Rng rng(config.seed, {0x5e9, 1});

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  for (std::size_t step = 0; step < config.steps; ++step) {
    SegModelParams grads = params.zeros_like();
    auto acc = grads.refs();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        cursor = 0;
      }
      const TrainSample& s = dataset[order[cursor++]];
      GateOptions gate{config.mask_threshold, s.transferability, config.percentile};
      SegLossAndGrad lg = seg_loss_and_grad(params, *s.features, s.labels, gate, s.pixel_weights);
      loss_sum += lg.loss;
      auto src = std::as_const(lg.grads).refs();
      for (std::size_t k = 0; k < acc.size(); ++k) add_inplace(*acc[k], *src[k]);
    }
    const double inv = 1.0 / static_cast<double>(config.batch_size);
    for (Matrix* m : acc) {
      for (double& v : m->values()) v *= inv;
    }
    adamw_step(opt, params.refs(), std::as_const(grads).refs());
    result.loss_log.push_back(loss_sum * inv);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace tmt
