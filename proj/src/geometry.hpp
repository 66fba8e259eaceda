#pragma once

#include "common.hpp"

namespace acae {

struct JointCatalog;

// Hard near-plane for projection; poses live metres from the camera so a
// violation signals bad data rather than a tight geometry.
inline constexpr double kMinDepthMm = 100.0;

// J landmark positions in millimetres, camera coordinates (+Z away from the
// camera), with a per-joint validity mask. Masked rows are skipped by every
// loss and metric.
struct Pose {
  MatX3 joints;
  std::vector<std::uint8_t> valid;

  int joint_count() const { return static_cast<int>(joints.rows()); }

  bool all_valid() const {
    for (auto v : valid)
      if (!v) return false;
    return true;
  }

  static Pose complete(MatX3 j) {
    Pose p;
    p.valid.assign(static_cast<std::size_t>(j.rows()), 1);
    p.joints = std::move(j);
    return p;
  }
};

struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    require(fx > 0.0 && fy > 0.0, Err::InvalidArgument, "camera focal lengths must be positive");
  }
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform make(const Mat3& r, const Vec3& t);
  static RigidTransform identity() { return RigidTransform{}; }

  // this ∘ other: apply `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

struct Projection2d {
  MatX2 uv;
  std::vector<std::uint8_t> valid;
};

// Pinhole projection of every valid joint; invalid joints stay invalid.
// Throws DepthTooSmall if a valid joint has z < kMinDepthMm.
Projection2d project(const Pose& pose, const CameraModel& cam);

// R*p + t on every valid joint; invalid rows and the mask pass through.
Pose apply_rigid(const Pose& pose, const RigidTransform& t);

// Mirrors a pose: negates x on all joints and swaps the left block rows with
// their right counterparts (mask included). Center rows keep their position.
Pose chirality_flip(const Pose& pose, const JointCatalog& catalog);

}  // namespace acae
