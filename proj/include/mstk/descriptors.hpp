//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_DESCRIPTORS_HPP_
#define MSTK_DESCRIPTORS_HPP_

#include <array>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mstk/frames.hpp"
#include "mstk/molecule.hpp"

namespace mstk {

constexpr int kDescriptorDim = 14;
/// [d, theta, |phi|, sign phi, l1..l4, a12, a13, a14, a23, a24, a34]
using DescriptorVec = Eigen::Matrix<double, kDescriptorDim, 1>;

// Slots of DescriptorVec.
constexpr int kSlotD = 0;
constexpr int kSlotTheta = 1;
constexpr int kSlotAbsPhi = 2;
constexpr int kSlotSign = 3;
constexpr int kSlotLength0 = 4;
constexpr int kSlotAngle0 = 8;

/// Padding for neighbor slots that do not exist (molecules under 5 atoms).
constexpr double kSentinelLength = 10.0;
constexpr double kSentinelAngle = 0.0;

struct GenerationDescriptor {
  double d = 1.0;
  double theta = 0.0;
  double abs_phi = 0.0;
  double sign_phi = 1.0; ///< +1 or -1; phi = 0 counts as +1

  bool operator==(const GenerationDescriptor &) const = default;
};

GenerationDescriptor generation_descriptor(const SphericalCoord &s);
SphericalCoord to_spherical(const GenerationDescriptor &g);

struct UnderstandingDescriptor {
  std::array<double, 4> lengths {
    kSentinelLength, kSentinelLength, kSentinelLength, kSentinelLength
  };
  /// Pairs (1,2) (1,3) (1,4) (2,3) (2,4) (3,4).
  std::array<double, 6> angles {};

  bool operator==(const UnderstandingDescriptor &) const = default;
};

/// Distances and pairwise angles to the four spatially nearest atoms of `i`
/// (bonded or not), nearest first; equal distances keep index order.
UnderstandingDescriptor understanding_descriptor(const Molecule &mol, int i);

DescriptorVec build_descriptor(const GenerationDescriptor &g,
                               const UnderstandingDescriptor &u);
std::pair<GenerationDescriptor, UnderstandingDescriptor>
split_descriptor(const DescriptorVec &v);

/// Descriptors of every atom of a line-ordered molecule with a conformer.
std::vector<DescriptorVec> molecule_descriptors(const Molecule &mol,
                                                FrameStrategy strategy);

enum class FeatureTransform {
  kLogLength,       ///< (ln x - mean) / std
  kUnitAngle,       ///< x / pi
  kPassthroughSign, ///< x
};

struct NormStats {
  std::array<FeatureTransform, kDescriptorDim> transform;
  /// Used by kLogLength slots only; 0 and 1 elsewhere.
  DescriptorVec mean = DescriptorVec::Zero();
  DescriptorVec stddev = DescriptorVec::Ones();
  double sentinel_length = kSentinelLength;
  double sentinel_angle = kSentinelAngle;

  NormStats();

  bool operator==(const NormStats &) const = default;
};

/// Mean and deviation of ln(length) over a corpus. Chunked so the result
/// does not depend on how work is split.
NormStats compute_norm_stats(std::span<const DescriptorVec> corpus);

/// Throws mstk::Error on a nonpositive length.
DescriptorVec normalize(const DescriptorVec &v, const NormStats &stats);
DescriptorVec denormalize(const DescriptorVec &v, const NormStats &stats);

} // namespace mstk

#endif // MSTK_DESCRIPTORS_HPP_
