#pragma once

#include "corpus.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace acae {

struct PoseLossWeights {
  double lambda_proj = 1.0;
  double lambda_abs = 0.1;
  double abs_depth_cap = 10000.0;  // mm

  void validate() const {
    require(lambda_proj >= 0.0 && lambda_abs >= 0.0 && abs_depth_cap > 0.0, Err::ConfigInvalid,
            "pose loss weights must be non-negative");
  }
};

struct PoseLossTerms {
  double meanrel = 0.0;  // mm, after aligning both sides at their valid-joint mean
  double proj = 0.0;     // px
  double abs = 0.0;      // mm, Z difference damped by min(1, cap/|z_gt|)
  double total = 0.0;
};

// Supervision loss over jointly valid joints; each term is a per-joint mean.
PoseLossTerms pose_loss(const Pose& pred, const Pose& gt, const CameraModel& cam,
                        const PoseLossWeights& w);
// Same, plus the analytic gradient w.r.t. the predicted joints.
PoseLossTerms pose_loss_grad(const Pose& pred, const Pose& gt, const CameraModel& cam,
                             const PoseLossWeights& w, MatX3& grad);

// l1 norm of the autoencoding residual ||P - W_dec W_enc P||_1 under frozen
// weights.
double consistency_loss(const Pose& pred, const AcaeWeights& frozen);
double consistency_loss_grad(const Pose& pred, const AcaeWeights& frozen, MatX3& grad);

// Same residual reported per joint, in mm.
double inconsistency_mm(const Pose& pred, const AcaeWeights& frozen);

// Student-teacher latent loss ||Q - stop_gradient(W_enc P)||_1. The gradient
// w.r.t. the pose prediction is exactly zero; only the latent-head gradient is
// produced.
double teacher_loss(const LatentPose& pred_latents, const Pose& pred_pose,
                    const AcaeWeights& frozen);
double teacher_loss_grad(const LatentPose& pred_latents, const Pose& pred_pose,
                         const AcaeWeights& frozen, MatX3& grad_latents);

enum class FinetuneVariant { SeparateHeads, ConsistencyRegularized, DirectLatent, Hybrid };

std::string variant_name(FinetuneVariant v);
FinetuneVariant variant_from_name(const std::string& name);

// Linear stand-in for the pose estimator: maps the flattened 2D observation
// (centered pixels of one reference format, plus bias) to a J-joint pose head
// and/or an L-latent head.
struct LinearLifter {
  Mat w_pose;  // (J*3) x obs_dim
  Vec b_pose;  // J*3
  Mat w_latent;  // (L*3) x obs_dim
  Vec b_latent;  // L*3
  bool has_pose_head = false;
  bool has_latent_head = false;
  int obs_dim = 0;

  Pose predict_pose(const Vec& obs) const;
  LatentPose predict_latents(const Vec& obs) const;
};

// 2D observation for one example: (u - cx, v - cy) of the reference format's
// joints, in catalog-format-local order.
Vec lifter_observation(const CorpusExample& ex, const JointCatalog& catalog, int reference_format);

struct LifterConfig {
  FinetuneVariant variant = FinetuneVariant::SeparateHeads;
  double lambda_cons = 1.0;
  double lambda_teach = 1.0;
  PoseLossWeights pose_weights;
  int reference_format = 0;
  double learning_rate = 1e-2;
  double lr_final = 0.0;
  int steps = 8000;
  int batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

// Adam on the variant's composite loss over a (possibly subset-masked) corpus.
// `init` continues from an existing lifter (fine-tuning); heads missing from
// it are freshly initialized.
LinearLifter train_lifter(const PoseCorpus& corpus, const AcaeWeights& frozen,
                          const LifterConfig& cfg, const LinearLifter* init = nullptr);

// The variant's inference output for one example.
Pose lifter_inference(const LinearLifter& lifter, const AcaeWeights& frozen, const Vec& obs,
                      FinetuneVariant variant);

struct VariantResult {
  std::string variant;
  double lambda_cons = 0.0;
  double lambda_teach = 0.0;
  MetricReport report;
  double inconsistency_mm = 0.0;            // vs the variant's own latent explanation
  double reencoded_inconsistency_mm = 0.0;  // residual after re-encoding the output
};

// Evaluates a trained lifter on complete ground truth.
VariantResult evaluate_lifter(const LinearLifter& lifter, const AcaeWeights& frozen,
                              const PoseCorpus& complete, const LifterConfig& cfg, int root_index);

struct ConsistencyDemoConfig {
  double lambda_cons = 1.0;
  double lambda_teach = 1.0;
  PoseLossWeights pose_weights;
  int reference_format = 0;
  double learning_rate = 1e-2;
  double lr_final = 0.0;
  int base_steps = 8000;
  int branch_steps = 4000;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double heldout_fraction = 0.1;
  std::vector<FinetuneVariant> variants = {
      FinetuneVariant::SeparateHeads, FinetuneVariant::ConsistencyRegularized,
      FinetuneVariant::DirectLatent, FinetuneVariant::Hybrid};
};

// Trains a shared separate-heads base on the masked corpus, branches into the
// requested variants, and evaluates each on the held-out complete poses.
std::vector<VariantResult> consistency_demo(const PoseCorpus& complete, const MaskPolicy& policy,
                                            const AcaeWeights& frozen,
                                            const ConsistencyDemoConfig& cfg);

void save_variant_csv(const std::vector<VariantResult>& rows, const std::string& path);

}  // namespace acae
