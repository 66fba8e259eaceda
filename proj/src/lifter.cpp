#include "lifter.hpp"

#include "rng.hpp"
#include "train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace acae {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<int> common_valid(const Pose& pred, const Pose& gt) {
  require(pred.joint_count() == gt.joint_count(), Err::ShapeMismatch,
          "prediction and ground truth joint counts differ");
  std::vector<int> idx;
  for (int j = 0; j < pred.joint_count(); ++j)
    if (pred.valid[static_cast<std::size_t>(j)] && gt.valid[static_cast<std::size_t>(j)])
      idx.push_back(j);
  return idx;
}

PoseLossTerms pose_loss_impl(const Pose& pred, const Pose& gt, const CameraModel& cam,
                             const PoseLossWeights& w, MatX3* grad) {
  w.validate();
  auto idx = common_valid(pred, gt);
  require(!idx.empty(), Err::NoValidJoints, "pose loss needs at least one jointly valid joint");
  const int n = static_cast<int>(idx.size());
  const double inv_n = 1.0 / n;
  if (grad) *grad = MatX3::Zero(pred.joint_count(), 3);

  PoseLossTerms terms;

  // Mean-relative: subtract each side's valid-joint mean, then l1.
  Eigen::RowVector3d mu_p = Eigen::RowVector3d::Zero(), mu_g = Eigen::RowVector3d::Zero();
  for (int j : idx) {
    mu_p += pred.joints.row(j);
    mu_g += gt.joints.row(j);
  }
  mu_p *= inv_n;
  mu_g *= inv_n;
  Eigen::RowVector3d sign_mean = Eigen::RowVector3d::Zero();
  std::vector<Eigen::RowVector3d> signs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int j = idx[static_cast<std::size_t>(i)];
    Eigen::RowVector3d r = (pred.joints.row(j) - mu_p) - (gt.joints.row(j) - mu_g);
    terms.meanrel += r.cwiseAbs().sum();
    if (grad) {
      signs[static_cast<std::size_t>(i)] = r.unaryExpr([](double x) { return sgn(x); });
      sign_mean += signs[static_cast<std::size_t>(i)];
    }
  }
  terms.meanrel *= inv_n;
  if (grad) {
    sign_mean *= inv_n;
    for (int i = 0; i < n; ++i)
      grad->row(idx[static_cast<std::size_t>(i)]) +=
          inv_n * (signs[static_cast<std::size_t>(i)] - sign_mean);
  }

  // Projection: l1 in pixels.
  if (w.lambda_proj > 0.0) {
    cam.validate();
    for (int j : idx) {
      double z = gt.joints(j, 2), zh = pred.joints(j, 2);
      require(z >= kMinDepthMm, Err::DepthTooSmall, "ground-truth joint too close to camera");
      require(zh >= kMinDepthMm, Err::DepthTooSmall, "predicted joint too close to camera");
      double du = cam.fx * (pred.joints(j, 0) / zh - gt.joints(j, 0) / z);
      double dv = cam.fy * (pred.joints(j, 1) / zh - gt.joints(j, 1) / z);
      terms.proj += std::abs(du) + std::abs(dv);
      if (grad) {
        double su = w.lambda_proj * inv_n * sgn(du);
        double sv = w.lambda_proj * inv_n * sgn(dv);
        (*grad)(j, 0) += su * cam.fx / zh;
        (*grad)(j, 1) += sv * cam.fy / zh;
        (*grad)(j, 2) +=
            -su * cam.fx * pred.joints(j, 0) / (zh * zh) - sv * cam.fy * pred.joints(j, 1) / (zh * zh);
      }
    }
    terms.proj *= inv_n;
  }

  // Absolute, with the Z difference damped beyond the effective distance cap.
  for (int j : idx) {
    double damp = std::min(1.0, w.abs_depth_cap / std::abs(gt.joints(j, 2)));
    double dx = pred.joints(j, 0) - gt.joints(j, 0);
    double dy = pred.joints(j, 1) - gt.joints(j, 1);
    double dz = (pred.joints(j, 2) - gt.joints(j, 2)) * damp;
    terms.abs += std::abs(dx) + std::abs(dy) + std::abs(dz);
    if (grad && w.lambda_abs > 0.0) {
      (*grad)(j, 0) += w.lambda_abs * inv_n * sgn(dx);
      (*grad)(j, 1) += w.lambda_abs * inv_n * sgn(dy);
      (*grad)(j, 2) += w.lambda_abs * inv_n * sgn(dz) * damp;
    }
  }
  terms.abs *= inv_n;

  terms.total = terms.meanrel + w.lambda_proj * terms.proj + w.lambda_abs * terms.abs;
  return terms;
}

}  // namespace

PoseLossTerms pose_loss(const Pose& pred, const Pose& gt, const CameraModel& cam,
                        const PoseLossWeights& w) {
  return pose_loss_impl(pred, gt, cam, w, nullptr);
}

PoseLossTerms pose_loss_grad(const Pose& pred, const Pose& gt, const CameraModel& cam,
                             const PoseLossWeights& w, MatX3& grad) {
  return pose_loss_impl(pred, gt, cam, w, &grad);
}

double consistency_loss(const Pose& pred, const AcaeWeights& frozen) {
  require(pred.all_valid(), Err::IncompleteInput, "consistency loss requires a complete pose");
  Mat map = frozen.decoder() * frozen.encoder();
  return (pred.joints - map * pred.joints).cwiseAbs().sum();
}

double consistency_loss_grad(const Pose& pred, const AcaeWeights& frozen, MatX3& grad) {
  require(pred.all_valid(), Err::IncompleteInput, "consistency loss requires a complete pose");
  Mat map = frozen.decoder() * frozen.encoder();
  MatX3 r = pred.joints - map * pred.joints;
  MatX3 s = r.unaryExpr([](double x) { return sgn(x); });
  grad = s - map.transpose() * s;
  return r.cwiseAbs().sum();
}

double inconsistency_mm(const Pose& pred, const AcaeWeights& frozen) {
  return consistency_loss(pred, frozen) / pred.joint_count();
}

double teacher_loss(const LatentPose& pred_latents, const Pose& pred_pose,
                    const AcaeWeights& frozen) {
  require(pred_latents.latent_count() == frozen.latent_count(), Err::ShapeMismatch,
          "latent count mismatch in teacher loss");
  LatentPose target = encode(frozen, pred_pose);
  return (pred_latents.latents - target.latents).cwiseAbs().sum();
}

double teacher_loss_grad(const LatentPose& pred_latents, const Pose& pred_pose,
                         const AcaeWeights& frozen, MatX3& grad_latents) {
  require(pred_latents.latent_count() == frozen.latent_count(), Err::ShapeMismatch,
          "latent count mismatch in teacher loss");
  LatentPose target = encode(frozen, pred_pose);
  MatX3 r = pred_latents.latents - target.latents;
  grad_latents = r.unaryExpr([](double x) { return sgn(x); });
  return r.cwiseAbs().sum();
}

std::string variant_name(FinetuneVariant v) {
  switch (v) {
    case FinetuneVariant::SeparateHeads:
      return "separate";
    case FinetuneVariant::ConsistencyRegularized:
      return "regularized";
    case FinetuneVariant::DirectLatent:
      return "latent";
    case FinetuneVariant::Hybrid:
      return "hybrid";
  }
  return "separate";
}

FinetuneVariant variant_from_name(const std::string& name) {
  if (name == "separate") return FinetuneVariant::SeparateHeads;
  if (name == "regularized") return FinetuneVariant::ConsistencyRegularized;
  if (name == "latent") return FinetuneVariant::DirectLatent;
  if (name == "hybrid") return FinetuneVariant::Hybrid;
  fail(Err::InvalidArgument, "unknown variant '" + name + "'");
}

Pose LinearLifter::predict_pose(const Vec& obs) const {
  require(has_pose_head, Err::InvalidArgument, "lifter has no pose head");
  require(obs.size() == obs_dim, Err::ShapeMismatch, "observation size mismatch");
  Vec flat = w_pose * obs + b_pose;
  int j_count = static_cast<int>(flat.size() / 3);
  MatX3 joints(j_count, 3);
  for (int j = 0; j < j_count; ++j)
    for (int c = 0; c < 3; ++c) joints(j, c) = flat[3 * j + c];
  return Pose::complete(std::move(joints));
}

LatentPose LinearLifter::predict_latents(const Vec& obs) const {
  require(has_latent_head, Err::InvalidArgument, "lifter has no latent head");
  require(obs.size() == obs_dim, Err::ShapeMismatch, "observation size mismatch");
  Vec flat = w_latent * obs + b_latent;
  int l_count = static_cast<int>(flat.size() / 3);
  LatentPose q;
  q.latents.resize(l_count, 3);
  for (int l = 0; l < l_count; ++l)
    for (int c = 0; c < 3; ++c) q.latents(l, c) = flat[3 * l + c];
  return q;
}

Vec lifter_observation(const CorpusExample& ex, const JointCatalog& catalog,
                       int reference_format) {
  require(reference_format >= 0 && reference_format < static_cast<int>(catalog.formats.size()),
          Err::InvalidArgument, "reference format index out of range");
  const auto& ref = catalog.format_joints[static_cast<std::size_t>(reference_format)];
  Vec obs(2 * ref.size() + 1);
  int off = 0;
  for (int idx : ref) {
    double z = ex.pose.joints(idx, 2);
    require(z >= kMinDepthMm, Err::DepthTooSmall, "observed joint too close to camera");
    obs[off++] = ex.cam.fx * ex.pose.joints(idx, 0) / z;  // u - cx
    obs[off++] = ex.cam.fy * ex.pose.joints(idx, 1) / z;  // v - cy
  }
  obs[off] = 1.0;  // bias input
  return obs;
}

void LifterConfig::validate() const {
  pose_weights.validate();
  require(lambda_cons >= 0.0 && lambda_teach >= 0.0, Err::ConfigInvalid,
          "lambda values must be non-negative");
  require(learning_rate > 0.0 && steps >= 0 && batch_size >= 1, Err::ConfigInvalid,
          "invalid lifter training configuration");
}

namespace {

bool needs_pose_head(FinetuneVariant v) { return v != FinetuneVariant::DirectLatent; }
bool needs_latent_head(FinetuneVariant v) {
  return v == FinetuneVariant::DirectLatent || v == FinetuneVariant::Hybrid;
}

// Mean pose / mean latents over the corpus; used to start heads at the scene
// center so projections are defined from step one.
MatX3 mean_joints(const PoseCorpus& corpus) {
  MatX3 mean = MatX3::Zero(corpus.joint_count(), 3);
  for (const auto& ex : corpus.examples) mean += ex.pose.joints;
  return mean / corpus.size();
}

Vec flatten_rows(const MatX3& m) {
  Vec v(m.rows() * 3);
  for (int i = 0; i < m.rows(); ++i)
    for (int c = 0; c < 3; ++c) v[3 * i + c] = m(i, c);
  return v;
}

}  // namespace

LinearLifter train_lifter(const PoseCorpus& corpus, const AcaeWeights& frozen,
                          const LifterConfig& cfg, const LinearLifter* init) {
  cfg.validate();
  corpus.validate();
  require(frozen.joint_count() == corpus.joint_count(), Err::ShapeMismatch,
          "frozen autoencoder does not match corpus");

  const int j_count = corpus.joint_count();
  const int l_count = frozen.latent_count();
  const bool pose_head = needs_pose_head(cfg.variant) || (init && init->has_pose_head);
  const bool latent_head = needs_latent_head(cfg.variant);

  std::vector<Vec> obs(static_cast<std::size_t>(corpus.size()));
  for (int k = 0; k < corpus.size(); ++k)
    obs[static_cast<std::size_t>(k)] =
        lifter_observation(corpus.examples[static_cast<std::size_t>(k)], corpus.catalog,
                           cfg.reference_format);
  const int obs_dim = static_cast<int>(obs[0].size());

  LinearLifter lifter;
  lifter.obs_dim = obs_dim;
  lifter.has_pose_head = pose_head;
  lifter.has_latent_head = latent_head;
  MatX3 mean = mean_joints(corpus);
  if (pose_head) {
    if (init && init->has_pose_head) {
      require(init->obs_dim == obs_dim, Err::ShapeMismatch, "initial lifter observation mismatch");
      lifter.w_pose = init->w_pose;
      lifter.b_pose = init->b_pose;
    } else {
      lifter.w_pose = Mat::Zero(j_count * 3, obs_dim);
      lifter.b_pose = flatten_rows(mean);
    }
  }
  if (latent_head) {
    if (init && init->has_latent_head && init->obs_dim == obs_dim) {
      lifter.w_latent = init->w_latent;
      lifter.b_latent = init->b_latent;
    } else {
      lifter.w_latent = Mat::Zero(l_count * 3, obs_dim);
      lifter.b_latent = flatten_rows(frozen.encoder() * mean);
    }
  }

  const Mat enc = frozen.encoder();
  const Mat dec = frozen.decoder();
  const Mat cons_map = dec * enc;

  // Packed parameter order: pose head (w then b), latent head (w then b).
  const int pose_params = pose_head ? j_count * 3 * (obs_dim + 1) : 0;
  const int latent_params = latent_head ? l_count * 3 * (obs_dim + 1) : 0;
  Vec params(pose_params + latent_params);
  auto pack = [&]() {
    int off = 0;
    if (pose_head) {
      params.segment(off, lifter.w_pose.size()) =
          Eigen::Map<const Vec>(lifter.w_pose.data(), lifter.w_pose.size());
      off += static_cast<int>(lifter.w_pose.size());
      params.segment(off, lifter.b_pose.size()) = lifter.b_pose;
      off += static_cast<int>(lifter.b_pose.size());
    }
    if (latent_head) {
      params.segment(off, lifter.w_latent.size()) =
          Eigen::Map<const Vec>(lifter.w_latent.data(), lifter.w_latent.size());
      off += static_cast<int>(lifter.w_latent.size());
      params.segment(off, lifter.b_latent.size()) = lifter.b_latent;
    }
  };
  auto unpack = [&]() {
    int off = 0;
    if (pose_head) {
      Eigen::Map<Vec>(lifter.w_pose.data(), lifter.w_pose.size()) =
          params.segment(off, lifter.w_pose.size());
      off += static_cast<int>(lifter.w_pose.size());
      lifter.b_pose = params.segment(off, lifter.b_pose.size());
      off += static_cast<int>(lifter.b_pose.size());
    }
    if (latent_head) {
      Eigen::Map<Vec>(lifter.w_latent.data(), lifter.w_latent.size()) =
          params.segment(off, lifter.w_latent.size());
      off += static_cast<int>(lifter.w_latent.size());
      lifter.b_latent = params.segment(off, lifter.b_latent.size());
    }
  };
  pack();

  AdamState state = AdamState::for_size(params.size());
  std::vector<int> train_idx(static_cast<std::size_t>(corpus.size()));
  std::iota(train_idx.begin(), train_idx.end(), 0);
  const int batches_per_epoch =
      (corpus.size() + cfg.batch_size - 1) / cfg.batch_size;

  Mat gw_pose, gw_latent;
  Vec gb_pose, gb_latent;
  int step = 0;
  int epoch = 0;
  while (step < cfg.steps) {
    std::vector<int> order = train_idx;
    {
      Rng rng(derive_seed(cfg.seed + static_cast<std::uint64_t>(epoch), "lifter-shuffle"));
      rng.shuffle(order.begin(), order.end());
    }
    for (int b = 0; b < batches_per_epoch && step < cfg.steps; ++b) {
      int lo = b * cfg.batch_size;
      int hi = std::min(corpus.size(), lo + cfg.batch_size);
      unpack();
      if (pose_head) {
        gw_pose = Mat::Zero(lifter.w_pose.rows(), lifter.w_pose.cols());
        gb_pose = Vec::Zero(lifter.b_pose.size());
      }
      if (latent_head) {
        gw_latent = Mat::Zero(lifter.w_latent.rows(), lifter.w_latent.cols());
        gb_latent = Vec::Zero(lifter.b_latent.size());
      }
      const double inv_b = 1.0 / (hi - lo);
      for (int bi = lo; bi < hi; ++bi) {
        const int k = order[static_cast<std::size_t>(bi)];
        const auto& ex = corpus.examples[static_cast<std::size_t>(k)];
        const Vec& o = obs[static_cast<std::size_t>(k)];

        MatX3 g_pose = MatX3::Zero(j_count, 3);
        MatX3 g_latent = MatX3::Zero(l_count, 3);
        Pose pred;
        LatentPose latents;
        if (pose_head) pred = lifter.predict_pose(o);
        if (latent_head) latents = lifter.predict_latents(o);

        if (cfg.variant == FinetuneVariant::SeparateHeads ||
            cfg.variant == FinetuneVariant::ConsistencyRegularized ||
            cfg.variant == FinetuneVariant::Hybrid) {
          MatX3 g;
          pose_loss_grad(pred, ex.pose, ex.cam, cfg.pose_weights, g);
          g_pose += g;
        }
        if (cfg.variant == FinetuneVariant::ConsistencyRegularized ||
            cfg.variant == FinetuneVariant::Hybrid) {
          if (cfg.lambda_cons > 0.0) {
            MatX3 r = pred.joints - cons_map * pred.joints;
            MatX3 s = r.unaryExpr([](double x) { return sgn(x); });
            g_pose += cfg.lambda_cons * (s - cons_map.transpose() * s);
          }
        }
        if (cfg.variant == FinetuneVariant::DirectLatent ||
            cfg.variant == FinetuneVariant::Hybrid) {
          Pose decoded = Pose::complete(dec * latents.latents);
          MatX3 g;
          pose_loss_grad(decoded, ex.pose, ex.cam, cfg.pose_weights, g);
          g_latent += dec.transpose() * g;
        }
        if (cfg.variant == FinetuneVariant::Hybrid && cfg.lambda_teach > 0.0) {
          MatX3 t = latents.latents - enc * pred.joints;  // teacher side is stop-gradient
          g_latent += cfg.lambda_teach * t.unaryExpr([](double x) { return sgn(x); });
        }

        if (pose_head) {
          Vec flat = flatten_rows(g_pose) * inv_b;
          gw_pose.noalias() += flat * o.transpose();
          gb_pose += flat;
        }
        if (latent_head) {
          Vec flat = flatten_rows(g_latent) * inv_b;
          gw_latent.noalias() += flat * o.transpose();
          gb_latent += flat;
        }
      }

      Vec grad(params.size());
      {
        int off = 0;
        if (pose_head) {
          grad.segment(off, gw_pose.size()) = Eigen::Map<const Vec>(gw_pose.data(), gw_pose.size());
          off += static_cast<int>(gw_pose.size());
          grad.segment(off, gb_pose.size()) = gb_pose;
          off += static_cast<int>(gb_pose.size());
        }
        if (latent_head) {
          grad.segment(off, gw_latent.size()) =
              Eigen::Map<const Vec>(gw_latent.data(), gw_latent.size());
          off += static_cast<int>(gw_latent.size());
          grad.segment(off, gb_latent.size()) = gb_latent;
        }
      }

      double lr = cfg.learning_rate;
      if (cfg.lr_final > 0.0 && cfg.steps > 1)
        lr *= std::pow(cfg.lr_final / cfg.learning_rate,
                       static_cast<double>(step) / static_cast<double>(cfg.steps - 1));
      adam_step(params, grad, state, lr);
      ++step;
    }
    ++epoch;
  }
  unpack();
  return lifter;
}

Pose lifter_inference(const LinearLifter& lifter, const AcaeWeights& frozen, const Vec& obs,
                      FinetuneVariant variant) {
  if (variant == FinetuneVariant::DirectLatent || variant == FinetuneVariant::Hybrid)
    return decode(frozen, lifter.predict_latents(obs));
  return lifter.predict_pose(obs);
}

VariantResult evaluate_lifter(const LinearLifter& lifter, const AcaeWeights& frozen,
                              const PoseCorpus& complete, const LifterConfig& cfg,
                              int root_index) {
  complete.validate();
  VariantResult out;
  out.variant = variant_name(cfg.variant);
  out.lambda_cons = cfg.lambda_cons;
  out.lambda_teach = cfg.lambda_teach;

  const bool latent_output =
      cfg.variant == FinetuneVariant::DirectLatent || cfg.variant == FinetuneVariant::Hybrid;
  const Mat dec = frozen.decoder();

  std::vector<Pose> preds, gts;
  preds.reserve(static_cast<std::size_t>(complete.size()));
  gts.reserve(static_cast<std::size_t>(complete.size()));
  double incon_sum = 0.0, reenc_sum = 0.0;
  for (const auto& ex : complete.examples) {
    Vec o = lifter_observation(ex, complete.catalog, cfg.reference_format);
    Pose pred;
    if (latent_output) {
      LatentPose q = lifter.predict_latents(o);
      pred = Pose::complete(dec * q.latents);
      // The output is decoded from its own latents; the residual against that
      // latent explanation is zero by construction.
      incon_sum += (pred.joints - dec * q.latents).cwiseAbs().sum() / complete.joint_count();
    } else {
      pred = lifter.predict_pose(o);
      incon_sum += inconsistency_mm(pred, frozen);
    }
    reenc_sum += inconsistency_mm(pred, frozen);
    preds.push_back(pred);
    gts.push_back(ex.pose);
  }
  out.inconsistency_mm = incon_sum / complete.size();
  out.reencoded_inconsistency_mm = reenc_sum / complete.size();
  out.report = evaluate_poses(preds, gts, root_index);
  return out;
}

std::vector<VariantResult> consistency_demo(const PoseCorpus& complete, const MaskPolicy& policy,
                                            const AcaeWeights& frozen,
                                            const ConsistencyDemoConfig& cfg) {
  complete.validate();
  require(frozen.catalog_hash == 0 || frozen.catalog_hash == complete.catalog.hash(),
          Err::ShapeMismatch, "frozen autoencoder was trained on a different joint catalog");
  std::vector<int> order(static_cast<std::size_t>(complete.size()));
  std::iota(order.begin(), order.end(), 0);
  {
    Rng rng(derive_seed(cfg.seed, "demo-split"));
    rng.shuffle(order.begin(), order.end());
  }
  int n_held = std::max(1, static_cast<int>(std::lround(cfg.heldout_fraction * complete.size())));
  require(complete.size() - n_held >= 1, Err::EmptyCorpus, "corpus too small for a demo split");
  std::vector<int> train_idx(order.begin(), order.end() - n_held);
  std::vector<int> held_idx(order.end() - n_held, order.end());
  PoseCorpus train = mask_subsets(complete.subset(train_idx), policy);
  PoseCorpus held = complete.subset(held_idx);
  const int root = complete.catalog.default_root();

  LifterConfig base_cfg;
  base_cfg.variant = FinetuneVariant::SeparateHeads;
  base_cfg.pose_weights = cfg.pose_weights;
  base_cfg.reference_format = cfg.reference_format;
  base_cfg.learning_rate = cfg.learning_rate;
  base_cfg.lr_final = cfg.lr_final;
  base_cfg.steps = cfg.base_steps;
  base_cfg.batch_size = cfg.batch_size;
  base_cfg.seed = derive_seed(cfg.seed, "demo-base");
  LinearLifter base = train_lifter(train, frozen, base_cfg);

  std::vector<VariantResult> results(cfg.variants.size());
  parallel_tasks(static_cast<int>(cfg.variants.size()), [&](int i) {
    FinetuneVariant v = cfg.variants[static_cast<std::size_t>(i)];
    LifterConfig vc = base_cfg;
    vc.variant = v;
    vc.lambda_cons = v == FinetuneVariant::SeparateHeads || v == FinetuneVariant::DirectLatent
                         ? 0.0
                         : cfg.lambda_cons;
    vc.lambda_teach = v == FinetuneVariant::Hybrid ? cfg.lambda_teach : 0.0;
    vc.steps = cfg.branch_steps;
    vc.seed = derive_seed(cfg.seed, "demo-" + variant_name(v));
    // Latent heads start from scratch; pose heads continue from the shared base.
    LinearLifter trained;
    if (v == FinetuneVariant::DirectLatent) {
      LifterConfig fresh = vc;
      fresh.steps = cfg.base_steps + cfg.branch_steps;  // no pretrained head to reuse
      trained = train_lifter(train, frozen, fresh);
    } else {
      trained = train_lifter(train, frozen, vc, &base);
    }
    results[static_cast<std::size_t>(i)] = evaluate_lifter(trained, frozen, held, vc, root);
  });
  return results;
}

void save_variant_csv(const std::vector<VariantResult>& rows, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write metrics csv: " + path);
  out << "variant,lambda_cons,lambda_teach,mpjpe,pmpjpe,pck100,cps200,inconsistency_mm\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.variant.c_str(), r.lambda_cons, r.lambda_teach, r.report.mpjpe,
                  r.report.pmpjpe, r.report.pck100, r.report.cps200, r.inconsistency_mm);
    out << buf;
  }
  require(out.good(), Err::Io, "write failed: " + path);
}

}  // namespace acae
