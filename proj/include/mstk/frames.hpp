//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_FRAMES_HPP_
#define MSTK_FRAMES_HPP_

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mstk/molecule.hpp"

namespace mstk {

/// Reference-atom selection rule used to build each atom's local frame.
enum class FrameStrategy {
  kSeq1D,     ///< f, c1, c2 = i-1, i-2, i-3
  kTopo2D,    ///< f = latest bonded predecessor; c1 = F(f), c2 = F(c1)
  kSpatial3D, ///< f as kTopo2D; c1, c2 = predecessors nearest to f
};

std::string_view to_string(FrameStrategy s);
/// Accepts "1d", "2d", "3d" (and the enumerator names); throws mstk::Error.
FrameStrategy parse_strategy(std::string_view s);

/// Placeholder for a reference slot with no available atom.
constexpr int kVirtual = -1;

struct FrameRefs {
  int focal = kVirtual;
  int c1 = kVirtual;
  int c2 = kVirtual;

  bool operator==(const FrameRefs &) const = default;
};

/// Norm threshold below which a frame axis counts as degenerate.
constexpr double kDegenerateTol = 1e-8;
/// Azimuths within this distance of 0 or pi snap onto it, so a sign is never
/// decided by rounding noise.
constexpr double kAzimuthSnap = 1e-9;
/// Spatial3D distances closer than this count as ties (smaller index wins).
constexpr double kDistanceTieTol = 1e-9;

template <class Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <class Scalar>
struct FrameBasis {
  Vector3<Scalar> origin;
  Vector3<Scalar> e1;
  Vector3<Scalar> e2;
  Vector3<Scalar> n;
};

/// Local spherical coordinates: d > 0, theta in [0, pi] measured from the
/// frame normal, phi in (-pi, pi] measured from e1 towards e2.
template <class Scalar>
struct Spherical {
  Scalar d = 0;
  Scalar theta = 0;
  Scalar phi = 0;
};

using SphericalCoord = Spherical<double>;

/// Gram-Schmidt frame at `origin` from two reference points. Returns nullopt
/// when either axis degenerates (coincident or collinear references).
template <class Scalar>
std::optional<FrameBasis<Scalar>>
try_build_basis(const Vector3<Scalar> &origin, const Vector3<Scalar> &c1,
                const Vector3<Scalar> &c2,
                Scalar tol = static_cast<Scalar>(kDegenerateTol)) {
  const Vector3<Scalar> a = c1 - origin;
  const Vector3<Scalar> b = c2 - origin;
  const Scalar na = a.norm();
  if (!(na >= tol))
    return std::nullopt;
  FrameBasis<Scalar> f;
  f.origin = origin;
  f.e1 = a / na;
  const Vector3<Scalar> r = b - b.dot(f.e1) * f.e1;
  const Scalar nr = r.norm();
  if (!(nr >= tol))
    return std::nullopt;
  f.e2 = r / nr;
  f.n = f.e1.cross(f.e2);
  return f;
}

/// As try_build_basis, but throws GeometryError on degeneracy.
FrameBasis<double> build_basis(const Vec3 &origin, const Vec3 &c1,
                               const Vec3 &c2);

/// Spherical coordinates of `x` in `basis`. Returns nullopt when `x`
/// coincides with the origin.
template <class Scalar>
std::optional<Spherical<Scalar>>
try_extract_spherical(const Vector3<Scalar> &x, const FrameBasis<Scalar> &b) {
  using std::atan2;
  using std::abs;
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Vector3<Scalar> v = x - b.origin;
  Spherical<Scalar> s;
  s.d = v.norm();
  if (!(s.d >= static_cast<Scalar>(kDegenerateTol)))
    return std::nullopt;
  const Scalar along = v.dot(b.n);
  const Vector3<Scalar> proj = v - along * b.n;
  const Scalar proj_norm = proj.norm();
  // atan2 forms equal arccos(v.n / d) and sign(proj.e2) * arccos(proj.e1 /
  // |proj|) but stay accurate near 0 and pi.
  s.theta = atan2(proj_norm, along);
  if (proj_norm < static_cast<Scalar>(kDegenerateTol)) {
    s.phi = 0;
  } else {
    s.phi = atan2(proj.dot(b.e2), proj.dot(b.e1));
    if (abs(s.phi) > pi - static_cast<Scalar>(kAzimuthSnap))
      s.phi = pi;
    else if (abs(s.phi) < static_cast<Scalar>(kAzimuthSnap))
      s.phi = 0;
  }
  return s;
}

/// Throws GeometryError when `x` coincides with the frame origin.
SphericalCoord extract_spherical(const Vec3 &x, const FrameBasis<double> &b);

/// Inverse of extract_spherical.
template <class Scalar>
Vector3<Scalar> place_atom(const FrameBasis<Scalar> &b,
                           const Spherical<Scalar> &s) {
  using std::cos;
  using std::sin;
  const Scalar st = sin(s.theta);
  return b.origin
         + s.d
               * (cos(s.theta) * b.n
                  + st * (cos(s.phi) * b.e1 + sin(s.phi) * b.e2));
}

/// Reference atoms for atom `i` (an index in line order). `positions` must
/// hold at least the first `i` atoms for kSpatial3D and may be null
/// otherwise. Throws GeometryError when a graph-based rule finds no bonded
/// predecessor for i >= 1.
FrameRefs select_frame(const Molecule &mol, int i, FrameStrategy strategy,
                       const Conformer *positions = nullptr);

/// Molecule-intrinsic orientation: columns are the unit x, y, z axes with
/// atom 0 at the origin, atom 1 on +x and the first atom off that axis in the
/// z = 0 plane with y > 0. Virtual references are phantom points expressed
/// in this frame, which keeps encoding SE(3)-invariant.
Eigen::Matrix3d gauge_frame(const Conformer &x);

/// Resolves virtual slots to phantom points and builds the basis used for
/// atom `i`. Collinear references fall back to perturbed phantoms.
FrameBasis<double> resolve_frame(const Conformer &x, const FrameRefs &refs,
                                 const Eigen::Matrix3d &gauge, int i);

/// Fixed coordinate emitted for atom 0, which always sits at the origin.
constexpr SphericalCoord kAnchorCoord { 1.0, 0.0, 0.0 };

/// Spherical coordinates of every atom of a connected molecule in line order.
std::vector<SphericalCoord> encode_molecule(const Molecule &mol,
                                            FrameStrategy strategy);
std::vector<SphericalCoord> encode_molecule(const Molecule &mol,
                                            std::span<const int> order,
                                            FrameStrategy strategy);

/// Sequential placement; the result is expressed in the gauge frame. Throws
/// GeometryError carrying the atom whose frame degenerated.
Conformer decode_molecule(const Molecule &graph,
                          std::span<const SphericalCoord> coords,
                          FrameStrategy strategy);
/// Columns of the result follow the indexing of `graph`, not line order.
Conformer decode_molecule(const Molecule &graph, std::span<const int> order,
                          std::span<const SphericalCoord> coords,
                          FrameStrategy strategy);

} // namespace mstk

#endif // MSTK_FRAMES_HPP_
