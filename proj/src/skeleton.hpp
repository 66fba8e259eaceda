#pragma once

#include "common.hpp"

#include <nlohmann/json.hpp>

namespace acae {

enum class Side { Left, Right, Center };

std::string side_name(Side s);
Side side_from_name(const std::string& s);

struct JointDef {
  std::string name;
  Side side = Side::Center;
  bool is_head = false;
};

// One dataset's landmark convention. Left joints are named "left_<x>" and must
// have a "right_<x>" counterpart in the same format.
struct SkeletonFormat {
  std::string name;
  std::vector<JointDef> joints;

  int joint_count() const { return static_cast<int>(joints.size()); }

  static SkeletonFormat from_json(const nlohmann::json& doc);
  static SkeletonFormat load_file(const std::string& path);
  nlohmann::ordered_json to_json() const;
};

struct CatalogJoint {
  int format = 0;        // index into formats
  std::string name;      // joint name within the format
  Side side = Side::Center;
  bool is_head = false;
};

// The merged joint set over all formats, reordered into left/right/center
// blocks. Left block index i and right block index i are anatomical mirrors.
struct JointCatalog {
  std::vector<SkeletonFormat> formats;
  std::vector<CatalogJoint> joints;            // catalog order
  int n_left = 0;
  int n_right = 0;
  int n_center = 0;
  std::vector<int> mirror;                     // catalog index -> mirrored catalog index
  std::vector<std::vector<int>> format_joints; // format -> catalog indices, format-local order

  int joint_count() const { return static_cast<int>(joints.size()); }
  int left_begin() const { return 0; }
  int right_begin() const { return n_left; }
  int center_begin() const { return n_left + n_right; }

  // Per-joint loss weights: 10 for head joints, 1 otherwise.
  Vec loss_weights() const;

  double left_fraction() const { return static_cast<double>(n_left) / joint_count(); }
  double center_fraction() const { return static_cast<double>(n_center) / joint_count(); }

  // First center joint; the conventional root for root-aligned metrics.
  int default_root() const;

  std::uint64_t hash() const;
};

JointCatalog build_catalog(const std::vector<SkeletonFormat>& formats);

// Latent block sizes mirroring the catalog's left/right/center proportions.
struct LatentPartition {
  int n_left = 0;
  int n_right = 0;
  int n_center = 0;

  int total() const { return n_left + n_right + n_center; }
};

LatentPartition latent_partition(const JointCatalog& catalog, int latent_count);

// Built-in demo format sets: "mini" (1 format, 5 joints), "demo1" (1, 15),
// "demo2" (2, 30), "demo3" (3, 60).
std::vector<SkeletonFormat> builtin_formats(const std::string& name);

}  // namespace acae
