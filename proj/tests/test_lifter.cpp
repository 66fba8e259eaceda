#include "lifter.hpp"

#include "oracles.hpp"
#include "train.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace acae;

namespace {

PoseCorpus planted(int latents, int k, double sigma, std::uint64_t seed, bool tagged = false) {
  SynthConfig cfg;
  cfg.formats = builtin_formats("demo2");
  cfg.true_latent_count = latents;
  cfg.example_count = k;
  cfg.noise_sigma = sigma;
  cfg.seed = seed;
  if (tagged) cfg.tags = {"alpha", "beta"};
  return synth_corpus(cfg).first;
}

AcaeWeights quick_acae(const PoseCorpus& corpus, int latents, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.latent_count = latents;
  cfg.steps = 4000;
  cfg.learning_rate = 3e-3;
  cfg.lr_final = 1e-4;
  cfg.chirality = false;
  cfg.head_weighting = false;
  cfg.val_fraction = 0.0;
  cfg.seed = seed;
  cfg.log_every = 1000;
  return fit_acae(corpus, cfg).first;
}

double pose_loss_oracle(const Pose& pred, const Pose& gt, const CameraModel& cam,
                        const PoseLossWeights& w) {
  std::vector<int> idx;
  for (int j = 0; j < pred.joint_count(); ++j)
    if (pred.valid[j] && gt.valid[j]) idx.push_back(j);
  int n = static_cast<int>(idx.size());
  double mp[3] = {0, 0, 0}, mg[3] = {0, 0, 0};
  for (int j : idx)
    for (int c = 0; c < 3; ++c) {
      mp[c] += pred.joints(j, c) / n;
      mg[c] += gt.joints(j, c) / n;
    }
  double meanrel = 0.0, proj = 0.0, abs_term = 0.0;
  for (int j : idx) {
    for (int c = 0; c < 3; ++c)
      meanrel += std::abs((pred.joints(j, c) - mp[c]) - (gt.joints(j, c) - mg[c]));
    double up = cam.fx * pred.joints(j, 0) / pred.joints(j, 2) + cam.cx;
    double vp = cam.fy * pred.joints(j, 1) / pred.joints(j, 2) + cam.cy;
    double ug = cam.fx * gt.joints(j, 0) / gt.joints(j, 2) + cam.cx;
    double vg = cam.fy * gt.joints(j, 1) / gt.joints(j, 2) + cam.cy;
    proj += std::abs(up - ug) + std::abs(vp - vg);
    double damp = std::min(1.0, w.abs_depth_cap / std::abs(gt.joints(j, 2)));
    abs_term += std::abs(pred.joints(j, 0) - gt.joints(j, 0)) +
                std::abs(pred.joints(j, 1) - gt.joints(j, 1)) +
                std::abs((pred.joints(j, 2) - gt.joints(j, 2)) * damp);
  }
  return meanrel / n + w.lambda_proj * proj / n + w.lambda_abs * abs_term / n;
}

}  // namespace

TEST_CASE("pose loss vanishes on perfect predictions") {
  Rng rng(61);
  Pose gt = oracle::random_pose(12, rng);
  CameraModel cam{1100, 1100, 640, 640};
  PoseLossWeights w;
  CHECK(pose_loss(gt, gt, cam, w).total == 0.0);
}

TEST_CASE("mean alignment removes constant offsets") {
  Rng rng(62);
  Pose gt = oracle::random_pose(10, rng);
  Pose pred = gt;
  pred.joints.rowwise() += Eigen::RowVector3d(40.0, -25.0, 60.0);
  CameraModel cam{1100, 1100, 640, 640};
  PoseLossWeights w;
  PoseLossTerms t = pose_loss(pred, gt, cam, w);
  CHECK(t.meanrel <= 1e-10);
  CHECK(t.abs > 1.0);
}

TEST_CASE("pose loss matches the scalar oracle on masked instances") {
  Rng rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    Pose gt = oracle::random_pose(14, rng);
    Pose pred = oracle::random_pose(14, rng);
    gt.valid[2] = 0;
    pred.valid[7] = 0;
    gt.joints(5, 2) = 10500.0 + 4000.0;  // beyond the 10 m cap
    CameraModel cam = oracle::random_camera(rng);
    PoseLossWeights w;
    double got = pose_loss(pred, gt, cam, w).total;
    double expect = pose_loss_oracle(pred, gt, cam, w);
    CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, expect));
  }
}

TEST_CASE("pose loss requires a jointly valid joint") {
  Rng rng(64);
  Pose gt = oracle::random_pose(4, rng);
  Pose pred = gt;
  for (int j = 0; j < 4; ++j) (j % 2 == 0 ? gt : pred).valid[j] = 0;
  CameraModel cam{1100, 1100, 640, 640};
  PoseLossWeights w;
  CHECK_THROWS_AS(pose_loss(pred, gt, cam, w), Error);
}

TEST_CASE("meanrel is translation invariant jointly and separately") {
  Rng rng(65);
  Pose gt = oracle::random_pose(9, rng);
  Pose pred = oracle::random_pose(9, rng);
  CameraModel cam{1100, 1100, 640, 640};
  PoseLossWeights w;
  w.lambda_proj = 0.0;
  w.lambda_abs = 0.0;
  double base = pose_loss(pred, gt, cam, w).total;
  Pose pred_shift = pred;
  pred_shift.joints.rowwise() += Eigen::RowVector3d(17.0, -4.0, 80.0);
  Pose gt_shift = gt;
  gt_shift.joints.rowwise() += Eigen::RowVector3d(-30.0, 12.0, 5.0);
  CHECK(std::abs(pose_loss(pred_shift, gt, cam, w).total - base) <= 1e-10 * std::max(1.0, base));
  CHECK(std::abs(pose_loss(pred_shift, gt_shift, cam, w).total - base) <=
        1e-10 * std::max(1.0, base));
}

TEST_CASE("pose loss gradient agrees with finite differences") {
  Rng rng(66);
  Pose gt = oracle::random_pose(8, rng);
  Pose pred = oracle::random_pose(8, rng);
  gt.valid[3] = 0;
  CameraModel cam{1100, 1100, 640, 640};
  PoseLossWeights w;
  MatX3 grad;
  pose_loss_grad(pred, gt, cam, w, grad);
  double h = 1e-6;
  for (int j = 0; j < 8; ++j)
    for (int c = 0; c < 3; ++c) {
      Pose hi = pred, lo = pred;
      hi.joints(j, c) += h;
      lo.joints(j, c) -= h;
      double fd = (pose_loss(hi, gt, cam, w).total - pose_loss(lo, gt, cam, w).total) / (2 * h);
      if (std::abs(grad(j, c)) <= 1e-10 && std::abs(fd) <= 1e-6) continue;
      CHECK(std::abs(grad(j, c) - fd) <=
            2e-5 * std::max({1e-3, std::abs(grad(j, c)), std::abs(fd)}));
    }
}

TEST_CASE("consistency loss is zero for identity autoencoders and fixed points") {
  Rng rng(67);
  AcaeWeights id;
  id.chiral = false;
  id.raw_enc = Mat::Identity(10, 10);
  id.raw_dec = Mat::Identity(10, 10);
  Pose p = oracle::random_pose(10, rng);
  CHECK(consistency_loss(p, id) == 0.0);

  // All joints at one point is a fixed point of any affine-combining map.
  AcaeWeights w = oracle::random_dense_weights(4, 10, rng);
  MatX3 ones_pose = MatX3::Ones(10, 3);
  ones_pose.col(0) *= 123.0;
  ones_pose.col(1) *= -55.0;
  ones_pose.col(2) *= 4000.0;
  CHECK(consistency_loss(Pose::complete(ones_pose), w) <= 1e-9);
}

TEST_CASE("the autoencoding map of a projection model has reachable fixed points") {
  // Exact projection weights: the planted mixing as decoder, its constrained
  // least-squares inverse as encoder. Iterating the map then lands on a fixed
  // point after a single application.
  SynthConfig cfg;
  cfg.formats = builtin_formats("demo2");
  cfg.true_latent_count = 6;
  cfg.example_count = 300;
  cfg.noise_sigma = 0.0;
  cfg.seed = 69;
  auto [corpus, mixing] = synth_corpus(cfg);
  AcaeWeights w;
  w.chiral = false;
  w.raw_dec = mixing.mix_dec;
  w.raw_enc = solve_encoder_least_squares(normalize_rows(mixing.mix_dec), corpus);
  Mat map = w.decoder() * w.encoder();
  // Small-scale probe keeps the double-precision floor below the 1e-9 bound.
  Rng rng(5);
  MatX3 p = oracle::random_pose(corpus.joint_count(), rng, 1.0, 0.0).joints;
  for (int it = 0; it < 3; ++it) p = map * p;
  CHECK(consistency_loss(Pose::complete(p), w) <= 1e-9);
}

TEST_CASE("consistency loss matches a scalar oracle and is translation-invariant") {
  Rng rng(70);
  AcaeWeights w = oracle::random_dense_weights(5, 12, rng);
  Pose p = oracle::random_pose(12, rng);
  Mat enc = oracle::normalize_rows(w.raw_enc);
  Mat dec = oracle::normalize_rows(w.raw_dec);
  MatX3 phat = oracle::affine_combine(dec, oracle::affine_combine(enc, p.joints));
  double expect = 0.0;
  for (int j = 0; j < 12; ++j)
    for (int c = 0; c < 3; ++c) expect += std::abs(p.joints(j, c) - phat(j, c));
  double got = consistency_loss(p, w);
  CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, expect));

  // Translations cancel exactly in the residual. Rotations rotate the
  // residual instead, which bounds the entrywise l1 within a sqrt(3) factor.
  RigidTransform shift;
  shift.translation = Vec3(123.0, -77.0, 450.0);
  double shifted = consistency_loss(apply_rigid(p, shift), w);
  CHECK(std::abs(shifted - got) <= 1e-9 * std::max(1.0, got));
  RigidTransform rot = RigidTransform::make(rng.rotation(), Vec3::Zero());
  double rotated = consistency_loss(apply_rigid(p, rot), w);
  CHECK(rotated <= std::sqrt(3.0) * got * (1.0 + 1e-12));
  CHECK(rotated >= got / std::sqrt(3.0) * (1.0 - 1e-12));

  CHECK(inconsistency_mm(p, w) == doctest::Approx(got / 12.0));
}

TEST_CASE("consistency loss requires complete poses") {
  Rng rng(71);
  AcaeWeights w = oracle::random_dense_weights(4, 8, rng);
  Pose p = oracle::random_pose(8, rng);
  p.valid[1] = 0;
  CHECK_THROWS_AS(consistency_loss(p, w), Error);
}

TEST_CASE("teacher loss is zero when the student matches the encoded teacher") {
  Rng rng(72);
  AcaeWeights w = oracle::random_dense_weights(5, 11, rng);
  Pose p = oracle::random_pose(11, rng);
  LatentPose q = encode(w, p);
  CHECK(teacher_loss(q, p, w) == 0.0);
}

TEST_CASE("teacher loss has l1 latent gradients and none toward the pose") {
  Rng rng(73);
  AcaeWeights w = oracle::random_dense_weights(5, 11, rng);
  Pose p = oracle::random_pose(11, rng);
  LatentPose q;
  q.latents = encode(w, p).latents;
  for (int i = 0; i < q.latents.size(); ++i) q.latents.data()[i] += rng.normal(0.0, 20.0);

  MatX3 grad_latents;
  double loss = teacher_loss_grad(q, p, w, grad_latents);
  CHECK(loss > 0.0);
  MatX3 target = encode(w, p).latents;
  for (int l = 0; l < 5; ++l)
    for (int c = 0; c < 3; ++c) {
      double d = q.latents(l, c) - target(l, c);
      double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      CHECK(grad_latents(l, c) == s);
    }
}

TEST_CASE("the teacher term never backpropagates into the pose head") {
  // Hybrid trainings that differ only in lambda_teach must produce
  // bit-identical pose heads: the stop-gradient blocks the only path by which
  // the teacher loss could reach them.
  PoseCorpus corpus = planted(6, 120, 2.0, 85, true);
  AcaeWeights frozen = quick_acae(corpus, 6, 9);
  MaskPolicy policy;
  policy["alpha"] = {"alpha"};
  policy["beta"] = {"beta"};
  PoseCorpus masked = mask_subsets(corpus, policy);
  LifterConfig cfg;
  cfg.variant = FinetuneVariant::Hybrid;
  cfg.steps = 120;
  cfg.seed = 31;
  cfg.lambda_teach = 0.0;
  LinearLifter a = train_lifter(masked, frozen, cfg);
  cfg.lambda_teach = 7.5;
  LinearLifter b = train_lifter(masked, frozen, cfg);
  CHECK(oracle::bits_equal(a.w_pose, b.w_pose));
  CHECK(oracle::bits_equal(a.b_pose, b.b_pose));
  CHECK_FALSE(oracle::bits_equal(a.w_latent, b.w_latent));
}

TEST_CASE("scalar oracle for the teacher loss") {
  Rng rng(74);
  AcaeWeights w = oracle::random_dense_weights(6, 9, rng);
  Pose p = oracle::random_pose(9, rng);
  LatentPose q;
  q.latents = MatX3::Zero(6, 3);
  for (int i = 0; i < q.latents.size(); ++i) q.latents.data()[i] = rng.normal(0.0, 500.0);
  MatX3 target = oracle::affine_combine(oracle::normalize_rows(w.raw_enc), p.joints);
  double expect = 0.0;
  for (int l = 0; l < 6; ++l)
    for (int c = 0; c < 3; ++c) expect += std::abs(q.latents(l, c) - target(l, c));
  double got = teacher_loss(q, p, w);
  CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, expect));
}

TEST_CASE("higher consistency weights drive the inconsistency metric down") {
  PoseCorpus corpus = planted(6, 400, 3.0, 75, true);
  AcaeWeights frozen = quick_acae(corpus, 6, 4);
  MaskPolicy policy;
  policy["alpha"] = {"alpha"};
  policy["beta"] = {"beta"};
  PoseCorpus masked = mask_subsets(corpus, policy);

  double prev = -1.0;
  int inversions = 0;
  for (double lambda : {0.0, 0.1, 1.0, 10.0}) {
    LifterConfig cfg;
    cfg.variant = lambda == 0.0 ? FinetuneVariant::SeparateHeads
                                : FinetuneVariant::ConsistencyRegularized;
    cfg.lambda_cons = lambda;
    cfg.steps = 2500;
    cfg.learning_rate = 1e-2;
    cfg.seed = 21;
    LinearLifter lifter = train_lifter(masked, frozen, cfg);
    double incon = 0.0;
    for (const auto& ex : masked.examples) {
      Vec o = lifter_observation(ex, masked.catalog, 0);
      incon += inconsistency_mm(lifter.predict_pose(o), frozen);
    }
    incon /= masked.size();
    if (prev >= 0.0 && incon > prev) ++inversions;
    prev = incon;
  }
  CHECK(inversions <= 1);
}

TEST_CASE("the demo rejects checkpoints from a different catalog") {
  PoseCorpus corpus = planted(6, 60, 2.0, 96, true);
  AcaeWeights frozen = quick_acae(corpus, 6, 2);
  frozen.catalog_hash = 0x1234;  // pretend it came from elsewhere
  MaskPolicy policy;
  policy["alpha"] = {"alpha"};
  policy["beta"] = {"beta"};
  ConsistencyDemoConfig cfg;
  cfg.base_steps = 10;
  cfg.branch_steps = 10;
  CHECK_THROWS_AS(consistency_demo(corpus, policy, frozen, cfg), Error);
}

TEST_CASE("the consistency demo produces one row per variant with sane metrics") {
  PoseCorpus corpus = planted(6, 350, 3.0, 77, true);
  AcaeWeights frozen = quick_acae(corpus, 6, 5);
  MaskPolicy policy;
  policy["alpha"] = {"alpha"};
  policy["beta"] = {"beta"};
  ConsistencyDemoConfig cfg;
  cfg.base_steps = 1500;
  cfg.branch_steps = 800;
  cfg.seed = 6;
  auto rows = consistency_demo(corpus, policy, frozen, cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].variant == "separate");
  CHECK(rows[1].variant == "regularized");
  CHECK(rows[2].variant == "latent");
  CHECK(rows[3].variant == "hybrid");
  for (const auto& r : rows) {
    CHECK(r.report.mpjpe > 0.0);
    CHECK(r.report.pck100 >= 0.0);
    CHECK(r.report.pck100 <= 100.0);
    CHECK(r.inconsistency_mm >= 0.0);
  }
  // latent-head outputs are their own decodings
  CHECK(rows[2].inconsistency_mm <= 1e-9);
  CHECK(rows[3].inconsistency_mm <= 1e-9);
  // regularization strictly lowers the inconsistency vs separate heads
  CHECK(rows[1].inconsistency_mm < rows[0].inconsistency_mm);

  save_variant_csv(rows, "tmp_variants.csv");
  std::ifstream in("tmp_variants.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "variant,lambda_cons,lambda_teach,mpjpe,pmpjpe,pck100,cps200,inconsistency_mm");
  std::remove("tmp_variants.csv");
}
