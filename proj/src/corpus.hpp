#pragma once

#include "geometry.hpp"
#include "skeleton.hpp"

#include <map>

namespace acae {

struct CorpusExample {
  Pose pose;
  CameraModel cam;
  std::string tag;
};

// K poses conforming to one catalog, each with a pinhole camera and a source
// tag used by subset-masking policies.
struct PoseCorpus {
  JointCatalog catalog;
  std::vector<CorpusExample> examples;

  int size() const { return static_cast<int>(examples.size()); }
  int joint_count() const { return catalog.joint_count(); }

  PoseCorpus subset(const std::vector<int>& indices) const;
  void validate() const;
};

struct SynthConfig {
  int true_latent_count = 16;  // planted latent count L*
  std::vector<SkeletonFormat> formats;
  double noise_sigma = 5.0;  // mm, i.i.d. per coordinate
  int example_count = 1000;  // K
  std::uint64_t seed = 1;
  double camera_distance_min = 2800.0;  // mm
  double camera_distance_max = 5200.0;
  double template_spread = 300.0;  // mm, stddev of the fixed latent template
  double jitter_sigma = 60.0;      // mm, per-example articulation jitter
  double focal_px = 1100.0;
  double principal_px = 640.0;
  std::vector<std::string> tags = {"synth"};

  void validate() const;
};

// The planted structure a synthetic corpus is generated from: a fixed latent
// template (rotated and jittered per example) decoded through a
// chirality-symmetric affine mixing with rows summing to 1.
struct GroundTruthMixing {
  Mat mix_dec;           // J x L*, rows sum to 1
  MatX3 latent_template;  // L* x 3
  double jitter_sigma = 0.0;
  std::uint64_t seed = 0;

  int latent_count() const { return static_cast<int>(mix_dec.cols()); }
};

std::pair<PoseCorpus, GroundTruthMixing> synth_corpus(const SynthConfig& cfg);

// tag -> allowed format names. Joints outside an example's allowed formats
// are masked invalid.
using MaskPolicy = std::map<std::string, std::vector<std::string>>;

PoseCorpus mask_subsets(const PoseCorpus& corpus, const MaskPolicy& policy);

// Greedy redundancy filter: keeps the first pose, then keeps a pose iff at
// least one jointly valid joint moved >= threshold_mm from the last KEPT pose.
std::vector<Pose> redundancy_filter(const std::vector<Pose>& sequence, double threshold_mm);
std::vector<int> redundancy_filter_indices(const std::vector<Pose>& sequence, double threshold_mm);
PoseCorpus redundancy_filter_corpus(const PoseCorpus& corpus, double threshold_mm);

// File formats. JSONL: one example per line,
//   {"joints": [[x,y,z],...], "valid": [...], "cam": {fx,fy,cx,cy}, "tag": "..."}
// The .bin mirror stores the same fields packed little-endian.
void save_corpus_jsonl(const PoseCorpus& corpus, const std::string& path);
void save_corpus_bin(const PoseCorpus& corpus, const std::string& path);
PoseCorpus load_corpus(const std::string& path, const JointCatalog& catalog);

void save_mixing_json(const GroundTruthMixing& mixing, const std::string& path);
GroundTruthMixing load_mixing_json(const std::string& path);

}  // namespace acae
