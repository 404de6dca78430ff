//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <numbers>

#include <doctest.h>

#include "mstk/random.hpp"
#include "mstk/synth.hpp"
#include "mstk/vq.hpp"

#include "test_util.hpp"

using namespace mstk;

namespace {

Matrix random_batch(Rng &rng, int n) {
  Matrix b(kDescriptorDim, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < kDescriptorDim; ++k)
      b(k, j) = rng.normal();
    b(kSlotSign, j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  return b;
}

MlpConfig small_config(bool sign_head) {
  MlpConfig c;
  c.latent_dim = 3;
  c.hidden_dim = 5;
  c.encoder_hidden_layers = 2;
  c.decoder_hidden_layers = 2;
  c.sign_hidden_layers = 2;
  c.sign_head = sign_head;
  return c;
}

} // namespace

TEST_SUITE("vq") {

TEST_CASE("quantize examples") {
  Matrix codes(2, 5);
  codes.row(0).setZero();
  codes.row(1).setOnes();
  const Codebook cb = make_codebook(codes);
  CHECK(quantize(cb, Vector::Constant(5, 0.9)) == 1);
  CHECK(quantize(cb, Vector::Zero(5)) == 0);
  CHECK(quantize(cb, Vector::Constant(5, 0.5)) == 0);
  Matrix lat(5, 3);
  lat.col(0).setConstant(0.9);
  lat.col(1).setZero();
  lat.col(2).setConstant(0.5);
  CHECK(quantize_batch(cb, lat) == std::vector<int> { 1, 0, 0 });
}

TEST_CASE("default shapes") {
  const MlpParams p = init_params(MlpConfig {}, 1);
  CHECK(p.encoder.input_dim() == 14);
  CHECK(p.encoder.output_dim() == 5);
  CHECK(p.decoder.input_dim() == 5);
  CHECK(p.decoder.output_dim() == 13);
  CHECK(p.sign.output_dim() == 1);
  const double count = static_cast<double>(p.parameter_count());
  CHECK(count == 71955);
  CHECK(std::abs(count - 74000) <= 0.2 * 74000);
  CHECK(p.all_finite());
  MlpConfig ab;
  ab.sign_head = false;
  const MlpParams q = init_params(ab, 1);
  CHECK(q.decoder.output_dim() == 14);
  CHECK(q.sign.layers.empty());
}

TEST_CASE("gelu derivative") {
  for (double x = -6; x <= 6; x += 0.37) {
    const double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
    CHECK(gelu_grad(x) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK(gelu(0) == 0);
  CHECK(gelu(10) == doctest::Approx(10));
}

TEST_CASE("gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    Rng rng(seed * 7919);
    for (bool sign_head: { true, false }) {
      const MlpParams p = init_params(small_config(sign_head), seed);
      Matrix codes(4, 3);
      for (int i = 0; i < codes.size(); ++i)
        codes.data()[i] = rng.normal();
      const Codebook cb = make_codebook(codes);
      const Matrix batch = random_batch(rng, 6);
      LossOptions plain;
      plain.bypass_quantizer = true;
      CHECK(test::gradient_error(p, cb, batch, plain) < 1e-4);
      LossOptions fixed;
      fixed.straight_through = false;
      fixed.beta = 0.4;
      CHECK(test::gradient_error(p, cb, batch, fixed) < 1e-4);
    }
  }
}

TEST_CASE("smallest network") {
  MlpConfig c;
  c.input_dim = kDescriptorDim;
  c.latent_dim = 1;
  c.hidden_dim = 1;
  c.encoder_hidden_layers = 0;
  c.decoder_hidden_layers = 0;
  c.sign_hidden_layers = 0;
  const MlpParams p = init_params(c, 3);
  // 14 + 1, 13 + 13, 1 + 1
  CHECK(p.parameter_count() == 43);
  Rng rng(4);
  Matrix codes(3, 1);
  codes << -1, 0.2, 1.5;
  const Matrix batch = random_batch(rng, 8);
  LossOptions fixed;
  fixed.straight_through = false;
  CHECK(test::gradient_error(p, make_codebook(codes), batch, fixed) < 1e-4);
}

TEST_CASE("bypassing the quantizer gives the plain autoencoder loss") {
  Rng rng(10);
  const MlpParams p = init_params(small_config(true), 10);
  const Matrix batch = random_batch(rng, 9);
  Matrix codes = Matrix::Zero(2, 3);
  LossOptions o;
  o.bypass_quantizer = true;
  const LossResult r = loss_and_grads(p, make_codebook(codes), batch, o);
  const Matrix z = p.encoder.forward(batch);
  const Matrix rec = p.decoder.forward(z);
  const Matrix logit = p.sign.forward(z);
  double se = 0, bce = 0;
  for (int j = 0; j < batch.cols(); ++j) {
    int out = 0;
    for (int k = 0; k < kDescriptorDim; ++k) {
      if (k == kSlotSign)
        continue;
      se += std::pow(rec(out++, j) - batch(k, j), 2);
    }
    const double y = batch(kSlotSign, j) > 0 ? 1.0 : 0.0;
    const double l = logit(0, j);
    bce += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
  }
  const double n = static_cast<double>(batch.cols());
  CHECK(r.reconstruction == doctest::Approx(se / n).epsilon(1e-12));
  CHECK(r.sign_bce == doctest::Approx(bce / n).epsilon(1e-12));
  CHECK(r.commitment == 0);
  CHECK(r.loss == doctest::Approx((se + bce) / n).epsilon(1e-12));
}

TEST_CASE("straight-through copies decoder gradients to the encoder") {
  Rng rng(6);
  const MlpParams p = init_params(small_config(true), 6);
  Matrix codes(3, 3);
  for (int i = 0; i < codes.size(); ++i)
    codes.data()[i] = rng.normal();
  const Codebook cb = make_codebook(codes);
  const Matrix batch = random_batch(rng, 5);
  LossOptions st;
  st.beta = 0;
  LossOptions none = st;
  none.straight_through = false;
  const LossResult a = loss_and_grads(p, cb, batch, st);
  const LossResult b = loss_and_grads(p, cb, batch, none);
  CHECK(a.loss == b.loss);
  CHECK(a.codes == b.codes);
  // Decoder and sign head see identical gradients either way.
  for (std::size_t l = 0; l < a.grads.decoder.layers.size(); ++l)
    CHECK(a.grads.decoder.layers[l].w == b.grads.decoder.layers[l].w);
  // Without the estimator and with beta = 0 the encoder gets nothing.
  bool any = false;
  for (const auto &layer: b.grads.encoder.layers)
    any = any || layer.w.cwiseAbs().maxCoeff() != 0
          || layer.b.cwiseAbs().maxCoeff() != 0;
  CHECK_FALSE(any);
  bool some = false;
  for (const auto &layer: a.grads.encoder.layers)
    some = some || layer.w.cwiseAbs().maxCoeff() > 0;
  CHECK(some);
}

TEST_CASE("beta zero removes the commitment term") {
  Rng rng(21);
  const MlpParams p = init_params(small_config(true), 21);
  Matrix codes(3, 3);
  for (int i = 0; i < codes.size(); ++i)
    codes.data()[i] = rng.normal();
  const Codebook cb = make_codebook(codes);
  const Matrix batch = random_batch(rng, 7);
  LossOptions o;
  o.beta = 0;
  const LossResult r = loss_and_grads(p, cb, batch, o);
  CHECK(r.commitment == 0);
  CHECK(r.loss == r.reconstruction + r.sign_bce);
  LossOptions o2 = o;
  o2.beta = 0.7;
  const LossResult r2 = loss_and_grads(p, cb, batch, o2);
  CHECK(r2.commitment > 0);
  for (std::size_t l = 0; l < r.grads.decoder.layers.size(); ++l)
    CHECK(r.grads.decoder.layers[l].w == r2.grads.decoder.layers[l].w);
}

TEST_CASE("zero residual") {
  MlpConfig c = small_config(true);
  MlpParams p = init_params(c, 2);
  Vector target(kDescriptorDim);
  for (int k = 0; k < kDescriptorDim; ++k)
    target[k] = 0.1 * k - 0.3;
  target[kSlotSign] = 1.0;
  Matrix codes = Matrix::Zero(2, 3);
  codes.row(0) << 0.5, -0.25, 1.0;
  codes.row(1) << -2, 2, -2;
  // Encoder ignores its input and emits code 0; decoder emits the target.
  for (auto &l: p.encoder.layers)
    l.w.setZero(), l.b.setZero();
  p.encoder.layers.back().b = codes.row(0).transpose();
  for (auto &l: p.decoder.layers)
    l.w.setZero(), l.b.setZero();
  Vector reg(kDescriptorDim - 1);
  for (int k = 0, o = 0; k < kDescriptorDim; ++k)
    if (k != kSlotSign)
      reg[o++] = target[k];
  p.decoder.layers.back().b = reg;
  for (auto &l: p.sign.layers)
    l.w.setZero(), l.b.setZero();
  p.sign.layers.back().b.setConstant(40.0);
  const LossResult r = loss_and_grads(p, make_codebook(codes), target, {});
  CHECK(r.codes == std::vector<int> { 0 });
  CHECK(r.reconstruction == 0);
  CHECK(r.commitment == 0);
  CHECK(r.sign_bce < 1e-15);
  CHECK(r.loss < 1e-15);
}

TEST_CASE("ema with no memory is the batch mean") {
  Matrix codes = Matrix::Zero(2, 2);
  codes.row(1) << 5, 5;
  Codebook cb = make_codebook(codes);
  Matrix lat(2, 3);
  lat << 1, 3, 9, 2, 4, 9;
  const std::vector<int> asg { 0, 0, 1 };
  ema_update(cb, lat, asg, 0.0);
  CHECK(cb.codes(0, 0) == doctest::Approx(2.0));
  CHECK(cb.codes(0, 1) == doctest::Approx(3.0));
  CHECK(cb.codes(1, 0) == doctest::Approx(9.0));
}

TEST_CASE("ema two batches") {
  Codebook cb = make_codebook(Matrix::Zero(1, 5));
  Matrix a = Matrix::Zero(5, 1), b = Matrix::Zero(5, 1);
  a(0, 0) = 1;
  b(0, 0) = 3;
  const std::vector<int> asg { 0 };
  ema_update(cb, a, asg, 0.5);
  ema_update(cb, b, asg, 0.5);
  CHECK(cb.codes(0, 0) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("unassigned codes keep their value") {
  Matrix codes(2, 2);
  codes << 0, 0, 4, -4;
  Codebook cb = make_codebook(codes);
  Matrix lat(2, 2);
  lat << 1, 2, 1, 2;
  ema_update(cb, lat, std::vector<int> { 1, 1 }, 0.9);
  CHECK(cb.codes(0, 0) == 0);
  const Vector before = cb.codes.row(1);
  ema_update(cb, lat, std::vector<int> { 0, 0 }, 0.9);
  CHECK((cb.codes.row(1).transpose() - before).norm() < 1e-12);
}

TEST_CASE("ema conserves total counts") {
  Rng rng(17);
  Matrix codes(16, 5);
  for (int i = 0; i < codes.size(); ++i)
    codes.data()[i] = rng.normal();
  Codebook cb = make_codebook(codes);
  for (int step = 0; step < 200; ++step) {
    const int n = 1 + static_cast<int>(rng.index(64));
    Matrix lat(5, n);
    for (int i = 0; i < lat.size(); ++i)
      lat.data()[i] = rng.normal();
    const auto asg = quantize_batch(cb, lat);
    const double g = 0.99;
    const double expect = g * cb.ema_counts.sum() + (1 - g) * n;
    ema_update(cb, lat, asg, g);
    CHECK(cb.ema_counts.sum() == doctest::Approx(expect).epsilon(1e-13));
    CHECK(cb.ema_counts.minCoeff() >= 0);
  }
}

TEST_CASE("single repeated vector") {
  DescriptorVec v;
  v << 1.1, 1.9, 2.1, -1, 1.1, 1.8, 2.1, 2.2, 1.9, 1.9, 1.8, 1.1, 1.2, 2.5;
  std::vector<DescriptorVec> data(2000, v);
  TrainConfig cfg;
  cfg.codebook_size = 2;
  cfg.batch_size = 64;
  cfg.learning_rate = 3e-3;
  cfg.warmup_epochs = 1;
  cfg.epochs = 30;
  cfg.seed = 5;
  const TrainResult r = train(data, cfg);
  CHECK(r.report.epochs.back().loss < 1e-3);
  CHECK(r.report.epochs.back().loss < r.report.epochs.front().loss);
  CHECK(r.report.final_metrics.utilization == 0.5);
  CHECK(r.model.params.all_finite());
  Quantizer q(r.model);
  const DescriptorVec back = q.decode_code(q.encode_atom(v));
  CHECK(std::abs(back[kSlotD] - v[kSlotD]) < 0.05);
  CHECK(back[kSlotSign] == -1);
}

TEST_CASE("training rejects bad input") {
  std::vector<DescriptorVec> few(10, DescriptorVec::Ones());
  TrainConfig cfg;
  cfg.codebook_size = 2;
  CHECK_THROWS_AS(train(few, cfg), Error);
  std::vector<DescriptorVec> enough(100, DescriptorVec::Ones());
  cfg.codebook_size = 1;
  CHECK_THROWS_AS(train(enough, cfg), Error);
  cfg.codebook_size = 2;
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(train(enough, cfg), Error);
}

TEST_CASE("decoded codes respect descriptor ranges") {
  std::vector<DescriptorVec> data;
  for (const auto &lm: generate_corpus(40, 3))
    for (auto &v: molecule_descriptors(lm.molecule, FrameStrategy::kTopo2D))
      data.push_back(v);
  TrainConfig cfg;
  cfg.codebook_size = 16;
  cfg.epochs = 3;
  cfg.seed = 2;
  Quantizer q(train(data, cfg).model);
  for (int k = 0; k < q.size(); ++k) {
    const DescriptorVec &v = q.decode_code(k);
    CHECK(v[kSlotD] > 0);
    for (int s = 0; s < kDescriptorDim; ++s) {
      if (s == kSlotTheta || s == kSlotAbsPhi || s >= kSlotAngle0) {
        CHECK(v[s] >= 0);
        CHECK(v[s] <= std::numbers::pi);
      }
    }
    CHECK(std::abs(v[kSlotSign]) == 1);
    CHECK(&q.decode_code(k) == &q.decode_code(k));
  }
  for (const auto &v: data) {
    const int c = q.encode_atom(v);
    CHECK(c >= 0);
    CHECK(c < q.size());
  }
}

} // TEST_SUITE
