//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <doctest.h>

#include "mstk/descriptors.hpp"
#include "mstk/error.hpp"
#include "mstk/smiles.hpp"
#include "mstk/synth.hpp"
#include "test_util.hpp"

using namespace mstk;
using std::numbers::pi;

namespace {

Molecule methane() {
  const double a = 1.09 / std::sqrt(3.0);
  Conformer x(3, 5);
  x.col(0) = Vec3::Zero();
  x.col(1) = Vec3(a, a, a);
  x.col(2) = Vec3(a, -a, -a);
  x.col(3) = Vec3(-a, a, -a);
  x.col(4) = Vec3(-a, -a, a);
  return parse_smiles("C").molecule.with_conformer(x);
}

// Brute force: sort all other atoms by distance, then plain arccos angles.
UnderstandingDescriptor oracle(const Molecule &m, int i) {
  const Conformer &x = m.conformer();
  std::vector<int> others;
  for (int j = 0; j < m.num_atoms(); ++j)
    if (j != i)
      others.push_back(j);
  std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
    return (x.col(a) - x.col(i)).norm() < (x.col(b) - x.col(i)).norm();
  });
  UnderstandingDescriptor u;
  const int k = std::min<int>(4, static_cast<int>(others.size()));
  for (int a = 0; a < k; ++a)
    u.lengths[a] = (x.col(others[a]) - x.col(i)).norm();
  int slot = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b, ++slot) {
      if (b >= k)
        continue;
      const Vec3 va = x.col(others[a]) - x.col(i);
      const Vec3 vb = x.col(others[b]) - x.col(i);
      u.angles[slot] = std::acos(
          std::clamp(va.dot(vb) / (va.norm() * vb.norm()), -1.0, 1.0));
    }
  return u;
}

} // namespace

TEST_SUITE("descriptors") {

TEST_CASE("methane carbon") {
  const auto u = understanding_descriptor(methane(), 0);
  for (double l: u.lengths)
    CHECK(l == doctest::Approx(1.09).epsilon(1e-12));
  for (double a: u.angles)
    CHECK(a == doctest::Approx(std::acos(-1.0 / 3.0)).epsilon(1e-12));
  CHECK(std::acos(-1.0 / 3.0) == doctest::Approx(1.9106).epsilon(1e-4));
}

TEST_CASE("diatomic padding") {
  Conformer x = Conformer::Zero(3, 2);
  x(0, 1) = 1.2;
  const Molecule m = parse_smiles("[C][C]").molecule.with_conformer(x);
  const auto u = understanding_descriptor(m, 0);
  CHECK(u.lengths[0] == doctest::Approx(1.2));
  for (int k = 1; k < 4; ++k)
    CHECK(u.lengths[k] == kSentinelLength);
  for (double a: u.angles)
    CHECK(a == kSentinelAngle);
}

TEST_CASE("water oxygen against brute force") {
  const Molecule w =
      infer_bonds(read_xyz("3\n\nO 0 0 0\nH 0.96 0 0\nH -0.24 0.93 0\n"));
  const auto u = understanding_descriptor(w, 0);
  const auto o = oracle(w, 0);
  for (int k = 0; k < 4; ++k)
    CHECK(u.lengths[k] == doctest::Approx(o.lengths[k]).epsilon(1e-12));
  for (int k = 0; k < 6; ++k)
    CHECK(u.angles[k] == doctest::Approx(o.angles[k]).epsilon(1e-12));
  CHECK(u.lengths[0] == doctest::Approx(0.96));
  CHECK(u.lengths[1] == doctest::Approx(std::hypot(0.24, 0.93)));
}

TEST_CASE("generated molecules against brute force") {
  for (const auto &lm: generate_corpus(40, 55)) {
    for (int i = 0; i < lm.molecule.num_atoms(); ++i) {
      const auto u = understanding_descriptor(lm.molecule, i);
      const auto o = oracle(lm.molecule, i);
      for (int k = 0; k < 4; ++k)
        CHECK(u.lengths[k] == doctest::Approx(o.lengths[k]).epsilon(1e-12));
      for (int k = 0; k < 6; ++k)
        CHECK(std::abs(u.angles[k] - o.angles[k]) < 1e-7);
      for (int k = 0; k + 1 < 4; ++k)
        if (u.lengths[k + 1] != kSentinelLength)
          CHECK(u.lengths[k] <= u.lengths[k + 1]);
    }
  }
}

TEST_CASE("coincident atoms are rejected") {
  Conformer x = Conformer::Zero(3, 2);
  const Molecule m = parse_smiles("[C][C]").molecule.with_conformer(x);
  CHECK_THROWS_AS(understanding_descriptor(m, 0), GeometryError);
}

TEST_CASE("build and split") {
  const GenerationDescriptor g { 1, 0, 0, 1 };
  const UnderstandingDescriptor u;
  const DescriptorVec v = build_descriptor(g, u);
  DescriptorVec expect;
  expect << 1, 0, 0, 1, kSentinelLength, kSentinelLength, kSentinelLength,
      kSentinelLength, kSentinelAngle, kSentinelAngle, kSentinelAngle,
      kSentinelAngle, kSentinelAngle, kSentinelAngle;
  CHECK(v == expect);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    GenerationDescriptor g2 { rng.uniform(0.5, 3), rng.uniform(0, pi),
                              rng.uniform(0, pi), rng.uniform() < 0.5 ? -1.0
                                                                      : 1.0 };
    UnderstandingDescriptor u2;
    for (double &l: u2.lengths)
      l = rng.uniform(0.5, 4);
    for (double &a: u2.angles)
      a = rng.uniform(0, pi);
    const auto [gg, uu] = split_descriptor(build_descriptor(g2, u2));
    CHECK(gg == g2);
    CHECK(uu == u2);
  }
}

TEST_CASE("methane descriptor composes both parts") {
  const Molecule m = methane();
  const auto desc = molecule_descriptors(m, FrameStrategy::kTopo2D);
  const auto coords = encode_molecule(m, FrameStrategy::kTopo2D);
  REQUIRE(desc.size() == 5);
  for (int i = 0; i < 5; ++i) {
    const auto [g, u] = split_descriptor(desc[i]);
    CHECK(g == generation_descriptor(coords[i]));
    CHECK(u == understanding_descriptor(m, i));
  }
  const auto [g0, u0] = split_descriptor(desc[0]);
  CHECK(u0.lengths[3] == doctest::Approx(1.09));
}

TEST_CASE("sign convention") {
  CHECK(generation_descriptor({ 1, 1, -0.5 }).sign_phi == -1);
  CHECK(generation_descriptor({ 1, 1, -0.5 }).abs_phi == 0.5);
  CHECK(generation_descriptor({ 1, 1, 0.0 }).sign_phi == 1);
  CHECK(generation_descriptor({ 1, 1, pi }).sign_phi == 1);
  const SphericalCoord s = to_spherical({ 1.3, 0.4, 2.0, -1 });
  CHECK(s.phi == -2.0);
}

TEST_CASE("invariant under rigid motions and distant permutations") {
  Rng rng(8);
  for (const auto &lm: generate_corpus(30, 66)) {
    const auto ref = molecule_descriptors(lm.molecule, FrameStrategy::kTopo2D);
    const Conformer y =
        (test::random_rotation(rng) * lm.molecule.conformer()).colwise()
        + test::random_translation(rng);
    const auto got = molecule_descriptors(lm.molecule.with_conformer(y),
                                          FrameStrategy::kTopo2D);
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK((ref[i] - got[i]).cwiseAbs().maxCoeff() < 1e-6);

    // Swapping two atoms outside atom 0's four nearest keeps u_0.
    const Molecule &m = lm.molecule;
    if (m.num_atoms() < 7)
      continue;
    std::vector<int> idx(m.num_atoms() - 1);
    std::iota(idx.begin(), idx.end(), 1);
    const Conformer &x = m.conformer();
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return (x.col(a) - x.col(0)).norm() < (x.col(b) - x.col(0)).norm();
    });
    std::vector<int> perm(m.num_atoms());
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[idx[4]], perm[idx[5]]);
    CHECK(understanding_descriptor(reorder(m, perm), 0)
          == understanding_descriptor(m, 0));
  }
}

TEST_CASE("normalization examples") {
  NormStats id;
  DescriptorVec v = build_descriptor({ 1.0, pi / 2, pi, 1 }, {});
  const DescriptorVec n = normalize(v, id);
  CHECK(n[kSlotD] == 0.0);
  CHECK(n[kSlotTheta] == doctest::Approx(0.5));
  CHECK(n[kSlotAbsPhi] == doctest::Approx(1.0));
  CHECK(n[kSlotSign] == 1.0);
  CHECK(n[kSlotLength0] == doctest::Approx(std::log(kSentinelLength)));
  v[kSlotD] = 0.0;
  CHECK_THROWS_AS(normalize(v, id), Error);
  v[kSlotD] = -1.0;
  CHECK_THROWS_AS(normalize(v, id), Error);
}

TEST_CASE("normalization round trip") {
  auto corpus = generate_corpus(60, 4);
  std::vector<DescriptorVec> all;
  for (const auto &lm: corpus)
    for (auto &v: molecule_descriptors(lm.molecule, FrameStrategy::kTopo2D))
      all.push_back(v);
  const NormStats s = compute_norm_stats(all);
  for (int k = 0; k < kDescriptorDim; ++k) {
    if (s.transform[k] == FeatureTransform::kLogLength)
      CHECK(s.stddev[k] > 0);
    else
      CHECK(s.transform[k]
            == (k == kSlotSign ? FeatureTransform::kPassthroughSign
                               : FeatureTransform::kUnitAngle));
  }
  for (const auto &v: all) {
    const DescriptorVec back = denormalize(normalize(v, s), s);
    CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff()));
  }
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    DescriptorVec v;
    for (int k = 0; k < kDescriptorDim; ++k)
      v[k] = rng.uniform(0.1, 3.0);
    v[kSlotSign] = rng.uniform() < 0.5 ? -1 : 1;
    const DescriptorVec back = denormalize(normalize(v, s), s);
    CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12 * 3.0);
  }
}

TEST_CASE("norm stats match a two-pass computation") {
  std::vector<DescriptorVec> all;
  for (const auto &lm: generate_corpus(80, 12))
    for (auto &v: molecule_descriptors(lm.molecule, FrameStrategy::kTopo2D))
      all.push_back(v);
  const NormStats s = compute_norm_stats(all);
  for (int k: { kSlotD, kSlotLength0, kSlotLength0 + 3 }) {
    double mean = 0;
    for (const auto &v: all)
      mean += std::log(v[k]);
    mean /= static_cast<double>(all.size());
    double var = 0;
    for (const auto &v: all)
      var += std::pow(std::log(v[k]) - mean, 2);
    var /= static_cast<double>(all.size());
    CHECK(s.mean[k] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.stddev[k] == doctest::Approx(std::sqrt(var)).epsilon(1e-10));
  }
  CHECK(s.sentinel_length == kSentinelLength);
  CHECK(s.sentinel_angle == kSentinelAngle);
}

} // TEST_SUITE
