//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_HARNESS_HPP_
#define MSTK_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mstk/frames.hpp"
#include "mstk/smiles.hpp"
#include "mstk/vq.hpp"

namespace mstk {

struct Summary {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  double p95 = 0;
  double max = 0;
};

/// NaN entries are skipped. Percentiles use linear interpolation.
Summary summarize(std::vector<double> values);

/// Gauge-frame RMSD compares the decoded conformer with the input moved into
/// its own gauge frame, without further alignment.
struct RoundtripRecord {
  std::string name;
  int atoms = 0;
  double exact_rmsd = 0;
  double exact_gauge_rmsd = 0;
  std::optional<double> quantized_rmsd;
  std::optional<double> quantized_gauge_rmsd;
  std::string error; ///< non-empty when decoding failed
};

RoundtripRecord roundtrip(const LineMolecule &lm, FrameStrategy strategy,
                          const Quantizer *quantizer = nullptr);

/// Input conformer expressed in its gauge frame (atom 0 at the origin).
Conformer to_gauge(const Conformer &x);

enum class NoiseSpace {
  kNormalized, ///< ln d, theta / pi, |phi| / pi
  kRaw,        ///< Angstrom and radians
};

struct NoiseStudyConfig {
  std::vector<double> noise_scales { 0.01, 0.05, 0.1 };
  std::vector<FrameStrategy> strategies { FrameStrategy::kSeq1D,
                                          FrameStrategy::kTopo2D,
                                          FrameStrategy::kSpatial3D };
  double rmsd_threshold = 1.0;
  std::size_t sample_count = 0; ///< 0 uses the whole corpus
  std::uint64_t seed = 0;
  NoiseSpace space = NoiseSpace::kNormalized;
};

struct NoiseCell {
  FrameStrategy strategy = FrameStrategy::kTopo2D;
  double scale = 0;
  std::size_t samples = 0;
  std::size_t below = 0;
  std::size_t failed = 0; ///< decode errors, counted as above threshold
  double fraction = 0;
  Summary aligned;
  Summary gauge;
};

/// Perturbs d, theta and |phi| of every atom with Gaussian noise and decodes.
/// Noise draws depend on (seed, molecule, atom, channel) only, so every
/// strategy and scale sees the same unit draws. The sign is never flipped.
std::vector<NoiseCell> noise_study(std::span<const LineMolecule> corpus,
                                   const NoiseStudyConfig &cfg);

SphericalCoord perturb(const SphericalCoord &s, const double unit_noise[3],
                       double scale, NoiseSpace space);

struct CodeRow {
  int code = 0;
  double d = 0;
  double theta = 0;
  double abs_phi = 0;
  double sign = 0;
};

std::vector<CodeRow> code_table(const Quantizer &q);

/// Atom-type x code hit counts; row types are atom symbols, sorted.
struct HitMatrix {
  std::vector<std::string> types;
  std::vector<std::vector<long>> counts;

  long type_total(std::size_t t) const;
  /// log(count / row total); -inf for zero counts.
  std::vector<std::vector<double>> log_prob() const;
  double utilization() const;
};

HitMatrix hit_matrix(std::span<const LineMolecule> corpus, const Quantizer &q);

/// All atom descriptors of a corpus in order.
std::vector<DescriptorVec> corpus_descriptors(
    std::span<const LineMolecule> corpus, FrameStrategy strategy);

struct SweepPoint {
  int k = 0;
  QuantizerMetrics metrics;
  /// Mean squared reconstruction error in normalized units over the 13
  /// regressed channels.
  double reconstruction = 0;
};

/// Trains one quantizer per K with otherwise identical config and seed.
std::vector<SweepPoint> k_sweep(std::span<const DescriptorVec> data,
                                const TrainConfig &cfg, std::span<const int> ks,
                                FrameStrategy strategy);

/// Normalized-space mean squared error of quantize-then-decode.
double reconstruction_mse(const Quantizer &q,
                          std::span<const DescriptorVec> raw);

} // namespace mstk

#endif // MSTK_HARNESS_HPP_
