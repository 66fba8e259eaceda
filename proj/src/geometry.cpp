#include "geometry.hpp"

#include "skeleton.hpp"

#include <cmath>

namespace acae {

RigidTransform RigidTransform::make(const Mat3& r, const Vec3& t) {
  double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-10, Err::InvalidArgument, "rotation is not orthonormal");
  require(std::abs(r.determinant() - 1.0) <= 1e-10, Err::InvalidArgument,
          "rotation determinant is not +1");
  RigidTransform out;
  out.rotation = r;
  out.translation = t;
  return out;
}

Projection2d project(const Pose& pose, const CameraModel& cam) {
  cam.validate();
  const int j = pose.joint_count();
  Projection2d out;
  out.uv = MatX2::Zero(j, 2);
  out.valid = pose.valid;
  for (int i = 0; i < j; ++i) {
    if (!pose.valid[static_cast<std::size_t>(i)]) continue;
    double z = pose.joints(i, 2);
    require(z >= kMinDepthMm, Err::DepthTooSmall,
            "joint " + std::to_string(i) + " has depth " + std::to_string(z) + " mm < " +
                std::to_string(kMinDepthMm) + " mm");
    out.uv(i, 0) = cam.fx * pose.joints(i, 0) / z + cam.cx;
    out.uv(i, 1) = cam.fy * pose.joints(i, 1) / z + cam.cy;
  }
  return out;
}

Pose apply_rigid(const Pose& pose, const RigidTransform& t) {
  Pose out = pose;
  for (int i = 0; i < pose.joint_count(); ++i) {
    if (!pose.valid[static_cast<std::size_t>(i)]) continue;
    out.joints.row(i) = (t.rotation * pose.joints.row(i).transpose() + t.translation).transpose();
  }
  return out;
}

Pose chirality_flip(const Pose& pose, const JointCatalog& catalog) {
  require(catalog.n_left == catalog.n_right, Err::PartitionMismatch,
          "left and right catalog blocks differ in size");
  require(pose.joint_count() == catalog.joint_count(), Err::ShapeMismatch,
          "pose joint count does not match catalog");
  Pose out = pose;
  for (int i = 0; i < pose.joint_count(); ++i) {
    int src = catalog.mirror[static_cast<std::size_t>(i)];
    out.joints.row(i) = pose.joints.row(src);
    out.joints(i, 0) = -out.joints(i, 0);
    out.valid[static_cast<std::size_t>(i)] = pose.valid[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace acae
