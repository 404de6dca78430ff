//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/frames.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "mstk/error.hpp"
#include "mstk/log.hpp"

namespace mstk {

std::string_view to_string(FrameStrategy s) {
  switch (s) {
  case FrameStrategy::kSeq1D:
    return "1d";
  case FrameStrategy::kTopo2D:
    return "2d";
  case FrameStrategy::kSpatial3D:
    return "3d";
  }
  return "?";
}

FrameStrategy parse_strategy(std::string_view s) {
  if (s == "1d" || s == "1D" || s == "seq1d" || s == "Seq1D")
    return FrameStrategy::kSeq1D;
  if (s == "2d" || s == "2D" || s == "topo2d" || s == "Topo2D")
    return FrameStrategy::kTopo2D;
  if (s == "3d" || s == "3D" || s == "spatial3d" || s == "Spatial3D")
    return FrameStrategy::kSpatial3D;
  throw Error("unknown frame strategy \"" + std::string(s)
              + "\" (expected 1d, 2d or 3d)");
}

FrameBasis<double> build_basis(const Vec3 &origin, const Vec3 &c1,
                               const Vec3 &c2) {
  auto b = try_build_basis<double>(origin, c1, c2);
  if (!b)
    throw GeometryError("degenerate frame", kVirtual);
  return *b;
}

SphericalCoord extract_spherical(const Vec3 &x, const FrameBasis<double> &b) {
  auto s = try_extract_spherical<double>(x, b);
  if (!s)
    throw GeometryError("atom coincides with its focal atom", kVirtual);
  return *s;
}

namespace {
// Latest predecessor bonded to j, or kVirtual.
int topo_parent(const Molecule &mol, int j) {
  if (j < 0)
    return kVirtual;
  int best = kVirtual;
  for (int k: mol.neighbors(j))
    if (k < j)
      best = std::max(best, k);
  return best;
}
} // namespace

FrameRefs select_frame(const Molecule &mol, int i, FrameStrategy strategy,
                       const Conformer *positions) {
  FrameRefs r;
  if (i <= 0)
    return r;

  if (strategy == FrameStrategy::kSeq1D) {
    r.focal = i - 1;
    r.c1 = i >= 2 ? i - 2 : kVirtual;
    r.c2 = i >= 3 ? i - 3 : kVirtual;
    return r;
  }

  r.focal = topo_parent(mol, i);
  if (r.focal == kVirtual)
    throw GeometryError("disconnected prefix: no bonded predecessor", i);

  if (strategy == FrameStrategy::kTopo2D) {
    r.c1 = topo_parent(mol, r.focal);
    r.c2 = topo_parent(mol, r.c1);
    return r;
  }

  if (!positions || positions->cols() < i)
    throw Error("spatial frame selection needs positions of preceding atoms");
  const Vec3 xf = positions->col(r.focal);
  std::array<int, 2> best { kVirtual, kVirtual };
  std::array<double, 2> best_d { 0.0, 0.0 };
  auto closer = [](double d, int j, double ref_d, int ref_j) {
    if (ref_j == kVirtual)
      return true;
    if (std::abs(d - ref_d) <= kDistanceTieTol)
      return j < ref_j;
    return d < ref_d;
  };
  for (int j = 0; j < i; ++j) {
    if (j == r.focal)
      continue;
    double d = (positions->col(j) - xf).norm();
    if (closer(d, j, best_d[0], best[0])) {
      best[1] = best[0];
      best_d[1] = best_d[0];
      best[0] = j;
      best_d[0] = d;
    } else if (closer(d, j, best_d[1], best[1])) {
      best[1] = j;
      best_d[1] = d;
    }
  }
  r.c1 = best[0];
  r.c2 = best[1];
  return r;
}

Eigen::Matrix3d gauge_frame(const Conformer &x) {
  Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
  const int n = static_cast<int>(x.cols());
  if (n < 2)
    return g;
  Vec3 ex = x.col(1) - x.col(0);
  const double len = ex.norm();
  if (len < kDegenerateTol)
    throw GeometryError("atom coincides with atom 0", 1);
  ex /= len;

  Vec3 ey = Vec3::Zero();
  bool found = false;
  for (int k = 2; k < n && !found; ++k) {
    Vec3 v = x.col(k) - x.col(0);
    Vec3 r = v - v.dot(ex) * ex;
    if (r.norm() > kDegenerateTol) {
      ey = r.normalized();
      found = true;
    }
  }
  if (!found) {
    // Fully collinear: every descriptor is independent of this choice.
    int axis = 0;
    ex.cwiseAbs().minCoeff(&axis);
    Vec3 a = Vec3::Unit(axis);
    ey = (a - a.dot(ex) * ex).normalized();
  }
  g.col(0) = ex;
  g.col(1) = ey;
  g.col(2) = ex.cross(ey);
  return g;
}

FrameBasis<double> resolve_frame(const Conformer &x, const FrameRefs &refs,
                                 const Eigen::Matrix3d &gauge, int i) {
  if (refs.focal == kVirtual)
    throw GeometryError("atom has no focal atom", i);
  const Vec3 origin = x.col(refs.focal);
  const Vec3 p1 = refs.c1 != kVirtual
                      ? Vec3(x.col(refs.c1))
                      : Vec3(origin + gauge * Vec3(-1.0, 0.0, 0.0));
  if ((p1 - origin).norm() < kDegenerateTol)
    throw GeometryError("reference atom coincides with focal atom", i);

  if (refs.c2 != kVirtual) {
    if (auto b = try_build_basis<double>(origin, p1, x.col(refs.c2)))
      return *b;
  }
  static const std::array<Vec3, 3> kPhantoms = {
    Vec3(0.0, -1.0, 0.0),
    Vec3(0.0, -1.0, 1e-3),
    Vec3(0.0, 0.0, 1.0),
  };
  for (std::size_t k = 0; k < kPhantoms.size(); ++k) {
    if (auto b = try_build_basis<double>(origin, p1,
                                         origin + gauge * kPhantoms[k])) {
      if (refs.c2 != kVirtual || k > 0)
        log_warning("collinear references for atom " + std::to_string(i)
                    + "; using phantom fallback");
      return *b;
    }
  }
  // Unreachable: e1 cannot be parallel to both (0,-1,0) and (0,0,1).
  throw GeometryError("degenerate frame", i);
}

std::vector<SphericalCoord> encode_molecule(const Molecule &mol,
                                            FrameStrategy strategy) {
  const int n = mol.num_atoms();
  std::vector<SphericalCoord> out;
  if (n == 0)
    return out;
  mol.require_connected();
  const Conformer &x = mol.conformer();
  const Eigen::Matrix3d gauge = gauge_frame(x);

  out.reserve(n);
  out.push_back(kAnchorCoord);
  for (int i = 1; i < n; ++i) {
    FrameRefs refs = select_frame(mol, i, strategy, &x);
    FrameBasis<double> basis = resolve_frame(x, refs, gauge, i);
    auto s = try_extract_spherical<double>(x.col(i), basis);
    if (!s)
      throw GeometryError("atom coincides with its focal atom", i);
    out.push_back(*s);
  }
  return out;
}

std::vector<SphericalCoord> encode_molecule(const Molecule &mol,
                                            std::span<const int> order,
                                            FrameStrategy strategy) {
  return encode_molecule(reorder(mol, order), strategy);
}

Conformer decode_molecule(const Molecule &graph,
                          std::span<const SphericalCoord> coords,
                          FrameStrategy strategy) {
  const int n = graph.num_atoms();
  if (static_cast<int>(coords.size()) != n)
    throw Error("coordinate count " + std::to_string(coords.size())
                + " does not match atom count " + std::to_string(n));
  Conformer x = Conformer::Zero(3, n);
  const Eigen::Matrix3d gauge = Eigen::Matrix3d::Identity();
  for (int i = 1; i < n; ++i) {
    const SphericalCoord &s = coords[i];
    if (!(s.d > 0.0) || !std::isfinite(s.d) || !std::isfinite(s.theta)
        || !std::isfinite(s.phi))
      throw GeometryError("invalid spherical coordinate", i);
    // select_frame only reads columns j < i, all placed already.
    FrameRefs refs = select_frame(graph, i, strategy, &x);
    FrameBasis<double> basis = resolve_frame(x, refs, gauge, i);
    x.col(i) = place_atom<double>(basis, s);
  }
  return x;
}

Conformer decode_molecule(const Molecule &graph, std::span<const int> order,
                          std::span<const SphericalCoord> coords,
                          FrameStrategy strategy) {
  Molecule line = reorder(graph, order);
  Conformer placed = decode_molecule(line, coords, strategy);
  Conformer out(3, graph.num_atoms());
  for (int k = 0; k < graph.num_atoms(); ++k)
    out.col(order[k]) = placed.col(k);
  return out;
}

} // namespace mstk
