//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/vq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mstk/random.hpp"

namespace mstk {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Matrix Mlp::forward(const Matrix &x, Tape *tape) const {
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix a = x;
  const std::size_t last = layers.size() - 1;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = (layers[l].w * a).colwise() + layers[l].b;
    if (tape) {
      tape->inputs.push_back(std::move(a));
      tape->pre.push_back(z);
    }
    if (l < last)
      a = z.unaryExpr([](double v) { return gelu(v); });
    else
      a = std::move(z);
  }
  return a;
}

Matrix Mlp::backward(const Tape &tape, const Matrix &grad_out,
                     Mlp &grads) const {
  Matrix g = grad_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size())
      g = g.cwiseProduct(
          tape.pre[l].unaryExpr([](double v) { return gelu_grad(v); }));
    grads.layers[l].w.noalias() += g * tape.inputs[l].transpose();
    grads.layers[l].b += g.rowwise().sum();
    g = layers[l].w.transpose() * g;
  }
  return g;
}

Mlp make_mlp(int in, int hidden, int n_hidden, int out, Rng &rng) {
  Mlp m;
  int prev = in;
  for (int l = 0; l <= n_hidden; ++l) {
    const int next = l == n_hidden ? out : hidden;
    const double a = 1.0 / std::sqrt(static_cast<double>(prev));
    Dense d { Matrix(next, prev), Vector(next) };
    for (Eigen::Index j = 0; j < d.w.cols(); ++j)
      for (Eigen::Index i = 0; i < d.w.rows(); ++i)
        d.w(i, j) = rng.uniform(-a, a);
    for (Eigen::Index i = 0; i < d.b.size(); ++i)
      d.b[i] = rng.uniform(-a, a);
    m.layers.push_back(std::move(d));
    prev = next;
  }
  return m;
}

namespace {

template <class P, class F>
void visit(P &p, F &&f) {
  for (auto *mlp: { &p.encoder, &p.decoder, &p.sign })
    for (auto &layer: mlp->layers) {
      f(layer.w.data(), static_cast<std::size_t>(layer.w.size()));
      f(layer.b.data(), static_cast<std::size_t>(layer.b.size()));
    }
}

} // namespace

void for_each_tensor(MlpParams &p,
                     const std::function<void(double *, std::size_t)> &f) {
  visit(p, f);
}

void for_each_tensor(
    const MlpParams &p,
    const std::function<void(const double *, std::size_t)> &f) {
  visit(p, f);
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](const double *, std::size_t s) { n += s; });
  return n;
}

bool MlpParams::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&](const double *d, std::size_t s) {
    for (std::size_t i = 0; i < s && ok; ++i)
      ok = std::isfinite(d[i]);
  });
  return ok;
}

bool MlpParams::operator==(const MlpParams &other) const {
  if (config != other.config)
    return false;
  auto same = [](const Mlp &a, const Mlp &b) {
    if (a.layers.size() != b.layers.size())
      return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l)
      if (a.layers[l].w != b.layers[l].w || a.layers[l].b != b.layers[l].b)
        return false;
    return true;
  };
  return same(encoder, other.encoder) && same(decoder, other.decoder)
         && same(sign, other.sign);
}

MlpParams init_params(const MlpConfig &c, std::uint64_t seed) {
  if (c.input_dim < 2 || c.latent_dim < 1 || c.hidden_dim < 1
      || c.encoder_hidden_layers < 0 || c.decoder_hidden_layers < 0
      || c.sign_hidden_layers < 0)
    throw Error("invalid network shape");
  Rng rng(seed);
  MlpParams p;
  p.config = c;
  p.encoder = make_mlp(c.input_dim, c.hidden_dim, c.encoder_hidden_layers,
                       c.latent_dim, rng);
  p.decoder = make_mlp(c.latent_dim, c.hidden_dim, c.decoder_hidden_layers,
                       c.output_dim(), rng);
  if (c.sign_head)
    p.sign = make_mlp(c.latent_dim, c.hidden_dim, c.sign_hidden_layers, 1, rng);
  return p;
}

MlpParams zeros_like(const MlpParams &p) {
  MlpParams z = p;
  for_each_tensor(z, [](double *d, std::size_t s) { std::fill(d, d + s, 0.0); });
  return z;
}

bool Codebook::operator==(const Codebook &o) const {
  return codes.rows() == o.codes.rows() && codes.cols() == o.codes.cols()
         && codes == o.codes && ema_counts.size() == o.ema_counts.size()
         && ema_counts == o.ema_counts && ema_sums.rows() == o.ema_sums.rows()
         && ema_sums.cols() == o.ema_sums.cols() && ema_sums == o.ema_sums
         && norm_stats == o.norm_stats;
}

Codebook make_codebook(Matrix codes, NormStats stats) {
  if (codes.rows() < 1)
    throw Error("codebook needs at least one code");
  Codebook cb;
  cb.ema_counts = Vector::Zero(codes.rows());
  cb.ema_sums = Matrix::Zero(codes.rows(), codes.cols());
  cb.codes = std::move(codes);
  cb.norm_stats = std::move(stats);
  return cb;
}

int quantize(const Codebook &codebook, const Eigen::Ref<const Vector> &latent) {
  int best = 0;
  double best_d = 0;
  for (int k = 0; k < codebook.size(); ++k) {
    double d = 0;
    for (int j = 0; j < codebook.dim(); ++j) {
      const double t = latent[j] - codebook.codes(k, j);
      d += t * t;
    }
    if (k == 0 || d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

std::vector<int> quantize_batch(const Codebook &codebook,
                                const Matrix &latents) {
  std::vector<int> q(latents.cols());
  for (Eigen::Index b = 0; b < latents.cols(); ++b)
    q[b] = quantize(codebook, latents.col(b));
  return q;
}

namespace {

double softplus(double s) {
  return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
}

double sigmoid(double s) {
  if (s >= 0)
    return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// Rows of the batch the decoder regresses.
Matrix regression_target(const Matrix &batch, const MlpConfig &c) {
  if (!c.sign_head)
    return batch;
  Matrix t(batch.rows() - 1, batch.cols());
  t.topRows(kSlotSign) = batch.topRows(kSlotSign);
  t.bottomRows(batch.rows() - kSlotSign - 1) =
      batch.bottomRows(batch.rows() - kSlotSign - 1);
  return t;
}

} // namespace

LossResult loss_and_grads(const MlpParams &params, const Codebook &codebook,
                          const Matrix &batch, const LossOptions &opts) {
  const MlpConfig &cfg = params.config;
  const Eigen::Index n = batch.cols();
  if (n == 0)
    throw Error("empty batch");
  if (batch.rows() != cfg.input_dim)
    throw Error("batch has wrong feature count");
  const double inv_n = 1.0 / static_cast<double>(n);

  LossResult r;
  r.grads = zeros_like(params);

  Mlp::Tape te;
  r.latents = params.encoder.forward(batch, &te);
  r.codes = quantize_batch(codebook, r.latents);
  Matrix c;
  if (opts.bypass_quantizer) {
    c = r.latents;
  } else {
    c.resize(cfg.latent_dim, n);
    for (Eigen::Index b = 0; b < n; ++b)
      c.col(b) = codebook.codes.row(r.codes[b]).transpose();
  }

  Mlp::Tape td;
  const Matrix out = params.decoder.forward(c, &td);
  const Matrix diff = out - regression_target(batch, cfg);
  r.reconstruction = diff.squaredNorm() * inv_n;
  Matrix g_c = params.decoder.backward(td, 2.0 * inv_n * diff, r.grads.decoder);

  if (cfg.sign_head) {
    Mlp::Tape ts;
    const Matrix s = params.sign.forward(c, &ts);
    Matrix g_s(1, n);
    double bce = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      const double y = batch(kSlotSign, b) > 0.0 ? 1.0 : 0.0;
      bce += softplus(s(0, b)) - y * s(0, b);
      g_s(0, b) = (sigmoid(s(0, b)) - y) * inv_n;
    }
    r.sign_bce = bce * inv_n;
    g_c += params.sign.backward(ts, g_s, r.grads.sign);
  }

  Matrix g_e = Matrix::Zero(cfg.latent_dim, n);
  if (!opts.bypass_quantizer) {
    const Matrix de = r.latents - c;
    r.commitment = opts.beta * de.squaredNorm() * inv_n;
    if (opts.beta != 0.0)
      g_e = (2.0 * opts.beta * inv_n) * de;
  }
  if (opts.bypass_quantizer || opts.straight_through)
    g_e += g_c;
  params.encoder.backward(te, g_e, r.grads.encoder);

  r.loss = r.reconstruction + r.sign_bce + r.commitment;
  return r;
}

void ema_update(Codebook &cb, const Matrix &latents,
                std::span<const int> assignments, double decay) {
  const int k = cb.size();
  if (static_cast<Eigen::Index>(assignments.size()) != latents.cols())
    throw Error("assignment count does not match latent count");
  Vector n = Vector::Zero(k);
  Matrix s = Matrix::Zero(k, cb.dim());
  for (std::size_t b = 0; b < assignments.size(); ++b) {
    const int q = assignments[b];
    if (q < 0 || q >= k)
      throw Error("code assignment out of range");
    n[q] += 1.0;
    s.row(q) += latents.col(static_cast<Eigen::Index>(b)).transpose();
  }
  cb.ema_counts = decay * cb.ema_counts + (1.0 - decay) * n;
  cb.ema_sums = decay * cb.ema_sums + (1.0 - decay) * s;
  for (int q = 0; q < k; ++q) {
    if (cb.ema_counts[q] == 0.0)
      continue;
    cb.codes.row(q) = cb.ema_sums.row(q) / std::max(cb.ema_counts[q],
                                                    kEmaEpsilon);
  }
}

Adam::Adam(const MlpParams &like, double beta1, double beta2, double eps)
    : m_(zeros_like(like)), v_(zeros_like(like)), beta1_(beta1),
      beta2_(beta2), eps_(eps) { }

void Adam::step(MlpParams &params, const MlpParams &grads, double lr) {
  ++t_;
  std::vector<std::pair<double *, std::size_t>> p, m, v;
  std::vector<const double *> g;
  for_each_tensor(params, [&](double *d, std::size_t s) { p.emplace_back(d, s); });
  for_each_tensor(m_, [&](double *d, std::size_t s) { m.emplace_back(d, s); });
  for_each_tensor(v_, [&](double *d, std::size_t s) { v.emplace_back(d, s); });
  for_each_tensor(grads, [&](const double *d, std::size_t) { g.push_back(d); });
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < p.size(); ++k) {
    double *pk = p[k].first;
    double *mk = m[k].first;
    double *vk = v[k].first;
    const double *gk = g[k];
    for (std::size_t i = 0; i < p[k].second; ++i) {
      mk[i] = beta1_ * mk[i] + (1.0 - beta1_) * gk[i];
      vk[i] = beta2_ * vk[i] + (1.0 - beta2_) * gk[i] * gk[i];
      pk[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + eps_);
    }
  }
}

namespace {

Matrix normalized_matrix(std::span<const DescriptorVec> raw,
                         const NormStats &stats) {
  Matrix m(kDescriptorDim, static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = normalize(raw[i], stats);
  return m;
}

} // namespace

TrainResult train(std::span<const DescriptorVec> dataset,
                  const TrainConfig &cfg, FrameStrategy strategy,
                  const std::function<void(const EpochStats &)> &on_epoch,
                  const EmaObserver &on_ema) {
  const int k = cfg.codebook_size;
  if (k < 2)
    throw Error("codebook size must be at least 2");
  if (cfg.batch_size < 1 || !(cfg.learning_rate > 0) || cfg.epochs < 1
      || cfg.warmup_epochs < 0 || cfg.beta < 0 || !(cfg.ema_decay >= 0)
      || !(cfg.ema_decay < 1))
    throw Error("invalid training configuration");
  if (dataset.size() < static_cast<std::size_t>(10) * k)
    throw Error("training needs at least 10 * K = " + std::to_string(10 * k)
                + " descriptors, got " + std::to_string(dataset.size()));
  if (cfg.mlp.input_dim != kDescriptorDim)
    throw Error("network input must match the descriptor width");

  TrainResult res;
  QuantizerModel &model = res.model;
  model.strategy = strategy;
  const NormStats stats = compute_norm_stats(dataset);
  const Matrix data = normalized_matrix(dataset, stats);
  const Eigen::Index n = data.cols();

  model.params = init_params(cfg.mlp, cfg.seed);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  // Start codes on encoder outputs of distinct random samples.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  {
    Matrix seeds(kDescriptorDim, k);
    for (int q = 0; q < k; ++q)
      seeds.col(q) = data.col(order[q]);
    model.codebook =
        make_codebook(model.params.encoder.forward(seeds).transpose(), stats);
  }

  Adam adam(model.params);
  LossOptions lopts;
  lopts.beta = cfg.beta;
  const Eigen::Index bs = cfg.batch_size;
  const long steps_per_epoch = static_cast<long>((n + bs - 1) / bs);
  const long warmup_steps = steps_per_epoch * cfg.warmup_epochs;
  res.report.samples = static_cast<std::size_t>(n);
  res.report.parameters = model.params.parameter_count();

  Matrix batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    EpochStats es;
    es.epoch = epoch + 1;
    std::vector<char> used(k, 0);
    Matrix last_latents;
    double weight = 0;
    for (Eigen::Index start = 0; start < n; start += bs) {
      const Eigen::Index m = std::min(bs, n - start);
      batch.resize(kDescriptorDim, m);
      for (Eigen::Index j = 0; j < m; ++j)
        batch.col(j) = data.col(order[start + j]);

      const long t = adam.steps();
      double lr = cfg.learning_rate;
      if (warmup_steps > 0 && t < warmup_steps)
        lr *= static_cast<double>(t + 1) / static_cast<double>(warmup_steps);
      es.learning_rate = lr;

      LossResult r = loss_and_grads(model.params, model.codebook, batch, lopts);
      if (!std::isfinite(r.loss) || r.loss > 1e6) {
        res.report.epochs.push_back(es);
        throw TrainingError("training diverged at epoch "
                                + std::to_string(epoch + 1) + " (loss "
                                + std::to_string(r.loss) + ")",
                            res.report);
      }
      adam.step(model.params, r.grads, lr);
      if (!model.params.all_finite())
        throw TrainingError("non-finite parameters after update",
                            res.report);
      const double before = on_ema ? model.codebook.ema_counts.sum() : 0.0;
      ema_update(model.codebook, r.latents, r.codes, cfg.ema_decay);
      if (on_ema)
        on_ema(static_cast<std::size_t>(m), before,
               model.codebook.ema_counts.sum());

      const double w = static_cast<double>(m);
      es.loss += r.loss * w;
      es.reconstruction += r.reconstruction * w;
      es.sign_bce += r.sign_bce * w;
      es.commitment += r.commitment * w;
      weight += w;
      for (int q: r.codes)
        used[q] = 1;
      last_latents = std::move(r.latents);
    }
    es.loss /= weight;
    es.reconstruction /= weight;
    es.sign_bce /= weight;
    es.commitment /= weight;
    es.utilization =
        static_cast<double>(std::count(used.begin(), used.end(), 1)) / k;

    // Dead codes restart on a latent from the last batch. The threshold is
    // a share of the EMA assignment mass, which is independent of the batch
    // size and of how long ago the code was last hit.
    const double mass = model.codebook.ema_counts.sum();
    for (int q = 0; q < k; ++q) {
      if (model.codebook.ema_counts[q] >= cfg.dead_code_threshold * mass)
        continue;
      const auto col = static_cast<Eigen::Index>(
          rng.index(static_cast<std::uint64_t>(last_latents.cols())));
      model.codebook.codes.row(q) = last_latents.col(col).transpose();
      model.codebook.ema_counts[q] = 0.0;
      model.codebook.ema_sums.row(q).setZero();
      ++es.reseeded;
    }
    res.report.epochs.push_back(es);
    if (on_epoch)
      on_epoch(es);
  }

  res.report.final_metrics = evaluate(Quantizer(model), dataset);
  return res;
}

Quantizer::Quantizer(QuantizerModel model): model_(std::move(model)) {
  const MlpParams &p = model_.params;
  const Codebook &cb = model_.codebook;
  if (cb.dim() != p.config.latent_dim)
    throw Error("codebook dimension does not match the network latent size");
  const Matrix c = cb.codes.transpose();
  const Matrix out = p.decoder.forward(c);
  Matrix logits;
  if (p.config.sign_head)
    logits = p.sign.forward(c);
  table_.resize(cb.size());
  for (int q = 0; q < cb.size(); ++q) {
    DescriptorVec v;
    if (p.config.sign_head) {
      int row = 0;
      for (int s = 0; s < kDescriptorDim; ++s)
        v[s] = s == kSlotSign ? 0.0 : out(row++, q);
      v[kSlotSign] = logits(0, q) >= 0.0 ? 1.0 : -1.0;
    } else {
      v = out.col(q);
      v[kSlotSign] = v[kSlotSign] >= 0.0 ? 1.0 : -1.0;
    }
    DescriptorVec raw = denormalize(v, cb.norm_stats);
    for (int s = 0; s < kDescriptorDim; ++s)
      if (cb.norm_stats.transform[s] == FeatureTransform::kUnitAngle)
        raw[s] = std::clamp(raw[s], 0.0, std::numbers::pi);
    table_[q] = raw;
  }
}

int Quantizer::encode_atom(const DescriptorVec &raw) const {
  Matrix x = normalize(raw, model_.codebook.norm_stats);
  Matrix e = model_.params.encoder.forward(x);
  return quantize(model_.codebook, e.col(0));
}

std::vector<int> Quantizer::encode_atoms(
    std::span<const DescriptorVec> raw) const {
  if (raw.empty())
    return {};
  const Matrix e = model_.params.encoder.forward(
      normalized_matrix(raw, model_.codebook.norm_stats));
  return quantize_batch(model_.codebook, e);
}

const DescriptorVec &Quantizer::decode_code(int q) const {
  if (q < 0 || q >= size())
    throw Error("structural code " + std::to_string(q) + " out of range [0, "
                + std::to_string(size()) + ")");
  return table_[q];
}

QuantizerMetrics evaluate(const Quantizer &qz,
                          std::span<const DescriptorVec> raw) {
  QuantizerMetrics m;
  m.samples = raw.size();
  if (raw.empty())
    return m;
  // Chunked to bound memory on large corpora.
  constexpr std::size_t kChunk = 8192;
  std::vector<char> used(qz.size(), 0);
  double sd = 0, st = 0, sp = 0, sl = 0, sa = 0;
  std::size_t sign_ok = 0;
  for (std::size_t i = 0; i < raw.size(); i += kChunk) {
    auto part = raw.subspan(i, std::min(kChunk, raw.size() - i));
    std::vector<int> codes = qz.encode_atoms(part);
    for (std::size_t j = 0; j < part.size(); ++j) {
      const DescriptorVec &v = part[j];
      const DescriptorVec &w = qz.decode_code(codes[j]);
      used[codes[j]] = 1;
      sd += std::pow(w[kSlotD] - v[kSlotD], 2);
      st += std::pow(w[kSlotTheta] - v[kSlotTheta], 2);
      const double phi_v = v[kSlotSign] * v[kSlotAbsPhi];
      const double phi_w = w[kSlotSign] * w[kSlotAbsPhi];
      sp += std::pow(std::remainder(phi_w - phi_v, 2.0 * std::numbers::pi), 2);
      sign_ok += (v[kSlotSign] > 0) == (w[kSlotSign] > 0);
      sl += (w.segment<4>(kSlotLength0) - v.segment<4>(kSlotLength0))
                .squaredNorm();
      sa += (w.segment<6>(kSlotAngle0) - v.segment<6>(kSlotAngle0))
                .squaredNorm();
    }
  }
  const double n = static_cast<double>(raw.size());
  m.gen_length_rmsd = std::sqrt(sd / n);
  m.gen_polar_rmsd = std::sqrt(st / n);
  m.gen_azimuth_rmsd = std::sqrt(sp / n);
  m.sign_accuracy = static_cast<double>(sign_ok) / n;
  m.und_length_rmsd = std::sqrt(sl / (4 * n));
  m.und_angle_rmsd = std::sqrt(sa / (6 * n));
  m.utilization =
      static_cast<double>(std::count(used.begin(), used.end(), 1)) / qz.size();
  return m;
}

} // namespace mstk
