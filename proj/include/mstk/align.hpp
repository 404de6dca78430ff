//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_ALIGN_HPP_
#define MSTK_ALIGN_HPP_

#include <Eigen/Dense>

namespace mstk {

/// Proper rotation R and translation t minimizing sum |R * mobile + t - target|^2
/// (Kabsch, with the reflection correction).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

template <class Derived>
RigidTransform kabsch(const Eigen::MatrixBase<Derived> &target,
                      const Eigen::MatrixBase<Derived> &mobile) {
  RigidTransform t;
  if (target.cols() == 0)
    return t;
  const Eigen::Vector3d ct = target.rowwise().mean();
  const Eigen::Vector3d cm = mobile.rowwise().mean();
  const Eigen::Matrix3d h =
      (mobile.colwise() - cm) * (target.colwise() - ct).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU
                                               | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0
                ? -1.0
                : 1.0;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = ct - t.rotation * cm;
  return t;
}

/// RMSD without superposition.
double rmsd(const Eigen::Matrix3Xd &a, const Eigen::Matrix3Xd &b);

/// RMSD after optimal rigid superposition of `mobile` onto `target`.
double aligned_rmsd(const Eigen::Matrix3Xd &target,
                    const Eigen::Matrix3Xd &mobile);

} // namespace mstk

#endif // MSTK_ALIGN_HPP_
