//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/align.hpp"

#include <cmath>

#include "mstk/error.hpp"

namespace mstk {

double rmsd(const Eigen::Matrix3Xd &a, const Eigen::Matrix3Xd &b) {
  if (a.cols() != b.cols())
    throw Error("rmsd: point counts differ");
  if (a.cols() == 0)
    return 0.0;
  return std::sqrt((a - b).colwise().squaredNorm().mean());
}

double aligned_rmsd(const Eigen::Matrix3Xd &target,
                    const Eigen::Matrix3Xd &mobile) {
  if (target.cols() != mobile.cols())
    throw Error("aligned_rmsd: point counts differ");
  RigidTransform t = kabsch(target, mobile);
  Eigen::Matrix3Xd moved = (t.rotation * mobile).colwise() + t.translation;
  return rmsd(target, moved);
}

} // namespace mstk
