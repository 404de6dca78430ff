//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_VQ_HPP_
#define MSTK_VQ_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mstk/descriptors.hpp"
#include "mstk/error.hpp"
#include "mstk/frames.hpp"

namespace mstk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Layer shapes. The defaults give an encoder 14-128-128-128-5, a decoder
/// 5-128-128-13 and a sign head 5-128-128-1, about 72k parameters.
struct MlpConfig {
  int input_dim = kDescriptorDim;
  int latent_dim = 5;
  int hidden_dim = 128;
  int encoder_hidden_layers = 3;
  int decoder_hidden_layers = 2;
  int sign_hidden_layers = 2;
  /// Without the head the decoder also regresses the sign slot.
  bool sign_head = true;

  int output_dim() const { return sign_head ? input_dim - 1 : input_dim; }

  bool operator==(const MlpConfig &) const = default;
};

struct Dense {
  Matrix w; ///< out x in
  Vector b;
};

/// Exact (erf-based) GELU and its derivative.
double gelu(double x);
double gelu_grad(double x);

/// Affine layers with GELU between them; the last layer is linear.
struct Mlp {
  std::vector<Dense> layers;

  struct Tape {
    std::vector<Matrix> inputs; ///< input of each layer
    std::vector<Matrix> pre;    ///< pre-activation of each layer
  };

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }

  /// Columns are samples.
  Matrix forward(const Matrix &x, Tape *tape = nullptr) const;
  /// Accumulates parameter gradients into `grads` (same shapes) and returns
  /// the gradient with respect to the input.
  Matrix backward(const Tape &tape, const Matrix &grad_out, Mlp &grads) const;
};

class Rng;

/// in -> hidden (x n_hidden) -> out, weights and biases drawn from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Mlp make_mlp(int in, int hidden, int n_hidden, int out, Rng &rng);

struct MlpParams {
  MlpConfig config;
  Mlp encoder;
  Mlp decoder;
  Mlp sign; ///< empty when config.sign_head is false

  std::size_t parameter_count() const;
  bool all_finite() const;

  bool operator==(const MlpParams &other) const;
};

MlpParams init_params(const MlpConfig &config, std::uint64_t seed);
MlpParams zeros_like(const MlpParams &p);

/// Calls f(data, size) for every weight and bias tensor in a fixed order.
void for_each_tensor(MlpParams &p,
                     const std::function<void(double *, std::size_t)> &f);
void for_each_tensor(const MlpParams &p,
                     const std::function<void(const double *, std::size_t)> &f);

struct Codebook {
  Matrix codes;      ///< K x latent_dim
  Vector ema_counts; ///< K
  Matrix ema_sums;   ///< K x latent_dim
  NormStats norm_stats;

  int size() const { return static_cast<int>(codes.rows()); }
  int dim() const { return static_cast<int>(codes.cols()); }

  bool operator==(const Codebook &other) const;
};

/// Codes set to `codes`, EMA state zeroed.
Codebook make_codebook(Matrix codes, NormStats stats = {});

/// Nearest code by Euclidean distance; ties go to the smaller index.
int quantize(const Codebook &codebook, const Eigen::Ref<const Vector> &latent);
std::vector<int> quantize_batch(const Codebook &codebook,
                                const Matrix &latents);

struct LossOptions {
  double beta = 0.25;
  /// Feed the encoder output straight to the decoder (plain autoencoder).
  bool bypass_quantizer = false;
  /// Copy decoder-input gradients onto the encoder output. When false the
  /// encoder only receives the commitment gradient, which is the exact
  /// derivative of the loss for fixed code assignments.
  bool straight_through = true;
};

struct LossResult {
  double loss = 0;
  double reconstruction = 0;
  double sign_bce = 0;
  double commitment = 0;
  MlpParams grads;
  std::vector<int> codes;
  Matrix latents; ///< latent_dim x batch
};

/// Loss and gradients on a batch of normalized descriptors (14 x B).
/// Reconstruction is the per-sample squared error summed over the regressed
/// slots; the sign head uses binary cross-entropy on logits; commitment is
/// beta |sg[c_q] - E(z)|^2. All three are averaged over the batch.
LossResult loss_and_grads(const MlpParams &params, const Codebook &codebook,
                          const Matrix &batch, const LossOptions &opts = {});

/// counts <- g counts + (1-g) n_k, sums <- g sums + (1-g) sum of assigned
/// latents, code <- sums / max(counts, 1e-5). Codes whose count is exactly
/// zero keep their value.
void ema_update(Codebook &codebook, const Matrix &latents,
                std::span<const int> assignments, double decay);

constexpr double kEmaEpsilon = 1e-5;

class Adam {
public:
  explicit Adam(const MlpParams &like, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(MlpParams &params, const MlpParams &grads, double lr);
  long steps() const { return t_; }

private:
  MlpParams m_;
  MlpParams v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

struct TrainConfig {
  int batch_size = 512;
  double learning_rate = 1e-4;
  int warmup_epochs = 5;
  double beta = 0.25;
  double ema_decay = 0.99;
  int epochs = 30;
  std::uint64_t seed = 0;
  int codebook_size = 256;
  /// Codes holding less than this share of the EMA counts are re-seeded
  /// after each epoch.
  double dead_code_threshold = 1e-3;
  MlpConfig mlp;
};

/// Reconstruction errors of quantize-then-decode, in raw units.
struct QuantizerMetrics {
  std::size_t samples = 0;
  double gen_length_rmsd = 0;  ///< d, Angstrom
  double gen_polar_rmsd = 0;   ///< theta, rad
  double gen_azimuth_rmsd = 0; ///< signed phi, wrapped difference, rad
  double sign_accuracy = 0;
  double und_length_rmsd = 0; ///< l1..l4, Angstrom
  double und_angle_rmsd = 0;  ///< six neighbor angles, rad
  double utilization = 0;     ///< fraction of codes used at least once
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0;
  double loss = 0;
  double reconstruction = 0;
  double sign_bce = 0;
  double commitment = 0;
  double utilization = 0;
  int reseeded = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  QuantizerMetrics final_metrics;
  std::size_t samples = 0;
  std::size_t parameters = 0;
};

class TrainingError: public Error {
public:
  TrainingError(const std::string &msg, TrainReport report)
      : Error(msg), report_(std::move(report)) { }
  const TrainReport &report() const noexcept { return report_; }

private:
  TrainReport report_;
};

/// Encoder, decoder and codebook for one frame strategy.
struct QuantizerModel {
  MlpParams params;
  Codebook codebook;
  FrameStrategy strategy = FrameStrategy::kTopo2D;

  bool operator==(const QuantizerModel &) const = default;
};

struct TrainResult {
  QuantizerModel model;
  TrainReport report;
};

/// Requires at least 10 * K samples (raw, unnormalized descriptors).
/// Deterministic for a fixed seed and data order. Throws TrainingError when
/// the loss diverges.
/// Sees every codebook update: batch size and total EMA count before and
/// after it.
using EmaObserver =
    std::function<void(std::size_t batch, double before, double after)>;

TrainResult train(std::span<const DescriptorVec> dataset,
                  const TrainConfig &cfg,
                  FrameStrategy strategy = FrameStrategy::kTopo2D,
                  const std::function<void(const EpochStats &)> &on_epoch = {},
                  const EmaObserver &on_ema = {});

/// Read-only inference; safe to share across threads.
class Quantizer {
public:
  explicit Quantizer(QuantizerModel model);

  const QuantizerModel &model() const { return model_; }
  int size() const { return model_.codebook.size(); }
  FrameStrategy strategy() const { return model_.strategy; }

  int encode_atom(const DescriptorVec &raw) const;
  std::vector<int> encode_atoms(std::span<const DescriptorVec> raw) const;
  /// Denormalized descriptor for code q: angles clamped to [0, pi], sign
  /// from the head's logit (>= 0 gives +1).
  const DescriptorVec &decode_code(int q) const;

private:
  QuantizerModel model_;
  std::vector<DescriptorVec> table_;
};

QuantizerMetrics evaluate(const Quantizer &q,
                          std::span<const DescriptorVec> raw);

} // namespace mstk

#endif // MSTK_VQ_HPP_
