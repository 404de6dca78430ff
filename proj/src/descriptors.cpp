//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mstk/error.hpp"

namespace mstk {

GenerationDescriptor generation_descriptor(const SphericalCoord &s) {
  return { s.d, s.theta, std::abs(s.phi), s.phi < 0.0 ? -1.0 : 1.0 };
}

SphericalCoord to_spherical(const GenerationDescriptor &g) {
  return { g.d, g.theta, g.sign_phi < 0.0 ? -g.abs_phi : g.abs_phi };
}

UnderstandingDescriptor understanding_descriptor(const Molecule &mol, int i) {
  const Conformer &x = mol.conformer();
  const int n = mol.num_atoms();
  if (i < 0 || i >= n)
    throw Error("atom index out of range: " + std::to_string(i));

  std::vector<std::pair<double, int>> near;
  near.reserve(n);
  for (int j = 0; j < n; ++j) {
    if (j == i)
      continue;
    double d = (x.col(j) - x.col(i)).norm();
    if (d < kDegenerateTol)
      throw GeometryError("atoms " + std::to_string(i) + " and "
                              + std::to_string(j) + " coincide",
                          i);
    near.emplace_back(d, j);
  }
  std::stable_sort(near.begin(), near.end(), [](const auto &a, const auto &b) {
    if (std::abs(a.first - b.first) <= kDistanceTieTol)
      return a.second < b.second;
    return a.first < b.first;
  });
  const int m = std::min<int>(4, static_cast<int>(near.size()));

  UnderstandingDescriptor u;
  std::array<Vec3, 4> dir;
  for (int k = 0; k < m; ++k) {
    u.lengths[k] = near[k].first;
    dir[k] = x.col(near[k].second) - x.col(i);
  }
  int slot = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b, ++slot) {
      if (b >= m) {
        u.angles[slot] = kSentinelAngle;
        continue;
      }
      u.angles[slot] =
          std::atan2(dir[a].cross(dir[b]).norm(), dir[a].dot(dir[b]));
    }
  }
  return u;
}

DescriptorVec build_descriptor(const GenerationDescriptor &g,
                               const UnderstandingDescriptor &u) {
  DescriptorVec v;
  v << g.d, g.theta, g.abs_phi, g.sign_phi, u.lengths[0], u.lengths[1],
      u.lengths[2], u.lengths[3], u.angles[0], u.angles[1], u.angles[2],
      u.angles[3], u.angles[4], u.angles[5];
  return v;
}

std::pair<GenerationDescriptor, UnderstandingDescriptor>
split_descriptor(const DescriptorVec &v) {
  GenerationDescriptor g { v[kSlotD], v[kSlotTheta], v[kSlotAbsPhi],
                           v[kSlotSign] };
  UnderstandingDescriptor u;
  for (int k = 0; k < 4; ++k)
    u.lengths[k] = v[kSlotLength0 + k];
  for (int k = 0; k < 6; ++k)
    u.angles[k] = v[kSlotAngle0 + k];
  return { g, u };
}

std::vector<DescriptorVec> molecule_descriptors(const Molecule &mol,
                                                FrameStrategy strategy) {
  std::vector<SphericalCoord> sph = encode_molecule(mol, strategy);
  std::vector<DescriptorVec> out;
  out.reserve(sph.size());
  for (int i = 0; i < mol.num_atoms(); ++i)
    out.push_back(build_descriptor(generation_descriptor(sph[i]),
                                   understanding_descriptor(mol, i)));
  return out;
}

NormStats::NormStats() {
  transform.fill(FeatureTransform::kUnitAngle);
  transform[kSlotD] = FeatureTransform::kLogLength;
  transform[kSlotSign] = FeatureTransform::kPassthroughSign;
  for (int k = 0; k < 4; ++k)
    transform[kSlotLength0 + k] = FeatureTransform::kLogLength;
}

namespace {

constexpr std::size_t kStatsChunk = 4096;

struct Moments {
  double n = 0;
  DescriptorVec mean = DescriptorVec::Zero();
  DescriptorVec m2 = DescriptorVec::Zero();

  // Chan et al. pairwise merge.
  void merge(const Moments &o) {
    if (o.n == 0)
      return;
    const double tot = n + o.n;
    const DescriptorVec delta = o.mean - mean;
    mean += delta * (o.n / tot);
    m2 += o.m2 + delta.cwiseProduct(delta) * (n * o.n / tot);
    n = tot;
  }
};

double checked_log(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw Error("length feature must be positive and finite, got "
                + std::to_string(x));
  return std::log(x);
}

Moments chunk_moments(std::span<const DescriptorVec> chunk,
                      const NormStats &tags) {
  Moments m;
  for (const DescriptorVec &v: chunk) {
    DescriptorVec t = DescriptorVec::Zero();
    for (int k = 0; k < kDescriptorDim; ++k)
      if (tags.transform[k] == FeatureTransform::kLogLength)
        t[k] = checked_log(v[k]);
    Moments one;
    one.n = 1;
    one.mean = t;
    m.merge(one);
  }
  return m;
}

Moments reduce(std::span<const Moments> parts) {
  if (parts.size() == 1)
    return parts[0];
  const std::size_t half = parts.size() / 2;
  Moments a = reduce(parts.first(half));
  a.merge(reduce(parts.subspan(half)));
  return a;
}

} // namespace

NormStats compute_norm_stats(std::span<const DescriptorVec> corpus) {
  NormStats s;
  if (corpus.empty())
    throw Error("cannot compute normalization statistics of an empty corpus");
  std::vector<Moments> parts;
  for (std::size_t i = 0; i < corpus.size(); i += kStatsChunk)
    parts.push_back(chunk_moments(
        corpus.subspan(i, std::min(kStatsChunk, corpus.size() - i)), s));
  Moments m = reduce(parts);
  for (int k = 0; k < kDescriptorDim; ++k) {
    if (s.transform[k] != FeatureTransform::kLogLength)
      continue;
    s.mean[k] = m.mean[k];
    double sd = std::sqrt(m.m2[k] / m.n);
    // A constant feature would divide by zero; leave it unscaled.
    s.stddev[k] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

DescriptorVec normalize(const DescriptorVec &v, const NormStats &stats) {
  DescriptorVec out;
  for (int k = 0; k < kDescriptorDim; ++k) {
    switch (stats.transform[k]) {
    case FeatureTransform::kLogLength:
      out[k] = (checked_log(v[k]) - stats.mean[k]) / stats.stddev[k];
      break;
    case FeatureTransform::kUnitAngle:
      out[k] = v[k] / std::numbers::pi;
      break;
    case FeatureTransform::kPassthroughSign:
      out[k] = v[k];
      break;
    }
  }
  return out;
}

DescriptorVec denormalize(const DescriptorVec &v, const NormStats &stats) {
  DescriptorVec out;
  for (int k = 0; k < kDescriptorDim; ++k) {
    switch (stats.transform[k]) {
    case FeatureTransform::kLogLength:
      out[k] = std::exp(v[k] * stats.stddev[k] + stats.mean[k]);
      break;
    case FeatureTransform::kUnitAngle:
      out[k] = v[k] * std::numbers::pi;
      break;
    case FeatureTransform::kPassthroughSign:
      out[k] = v[k];
      break;
    }
  }
  return out;
}

} // namespace mstk
