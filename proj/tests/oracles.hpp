// Independent oracles for the test suites: straightforward scalar-loop
// reimplementations kept deliberately free of the library's linear-algebra
// paths, so agreement is evidence rather than tautology.
#pragma once

#include "corpus.hpp"
#include "geometry.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "skeleton.hpp"

#include <cmath>
#include <vector>

namespace oracle {

// Bitwise equality of two dense Eigen objects.
template <typename A, typename B>
bool bits_equal(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

using acae::AcaeWeights;
using acae::CameraModel;
using acae::JointCatalog;
using acae::Mat;
using acae::MatX2;
using acae::MatX3;
using acae::Pose;
using acae::PoseCorpus;
using acae::Vec;

// Per-joint pinhole projection, one scalar at a time.
inline MatX2 project(const Pose& pose, const CameraModel& cam) {
  MatX2 uv = MatX2::Zero(pose.joint_count(), 2);
  for (int j = 0; j < pose.joint_count(); ++j) {
    if (!pose.valid[static_cast<std::size_t>(j)]) continue;
    double x = pose.joints(j, 0), y = pose.joints(j, 1), z = pose.joints(j, 2);
    uv(j, 0) = cam.fx * x / z + cam.cx;
    uv(j, 1) = cam.fy * y / z + cam.cy;
  }
  return uv;
}

// Chirality flip via an explicit permutation matrix and axis sign matrix.
inline MatX3 chirality_flip(const MatX3& joints, const JointCatalog& cat) {
  const int j_count = static_cast<int>(joints.rows());
  Mat perm = Mat::Zero(j_count, j_count);
  for (int i = 0; i < cat.n_left; ++i) {
    perm(i, cat.right_begin() + i) = 1.0;
    perm(cat.right_begin() + i, i) = 1.0;
  }
  for (int i = cat.center_begin(); i < j_count; ++i) perm(i, i) = 1.0;
  Mat flip = Mat::Identity(3, 3);
  flip(0, 0) = -1.0;
  return perm * joints * flip;
}

// Row-normalized matrix-vector products done coordinate by coordinate.
inline MatX3 affine_combine(const Mat& normalized, const MatX3& points) {
  MatX3 out = MatX3::Zero(normalized.rows(), 3);
  for (int i = 0; i < normalized.rows(); ++i)
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int j = 0; j < normalized.cols(); ++j) acc += normalized(i, j) * points(j, c);
      out(i, c) = acc;
    }
  return out;
}

inline Mat normalize_rows(const Mat& raw) {
  Mat out(raw.rows(), raw.cols());
  for (int i = 0; i < raw.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < raw.cols(); ++j) s += raw(i, j);
    for (int j = 0; j < raw.cols(); ++j) out(i, j) = raw(i, j) / s;
  }
  return out;
}

inline double weighted_l1(const MatX3& a, const MatX3& b, const Vec& jw) {
  double sum = 0.0;
  for (int j = 0; j < a.rows(); ++j)
    for (int c = 0; c < 3; ++c) sum += jw[j] * std::abs(a(j, c) - b(j, c));
  return sum;
}

inline double reconstruction_loss(const AcaeWeights& w, const PoseCorpus& corpus, const Vec& jw) {
  Mat enc = normalize_rows(w.raw_encoder());
  Mat dec = normalize_rows(w.raw_decoder());
  double sum = 0.0;
  for (const auto& ex : corpus.examples) {
    MatX3 phat = affine_combine(dec, affine_combine(enc, ex.pose.joints));
    sum += weighted_l1(phat, ex.pose.joints, jw);
  }
  return sum / corpus.size();
}

inline double projected_reconstruction_loss(const AcaeWeights& w, const PoseCorpus& corpus,
                                            const Vec& jw) {
  Mat enc = normalize_rows(w.raw_encoder());
  Mat dec = normalize_rows(w.raw_decoder());
  double sum = 0.0;
  for (const auto& ex : corpus.examples) {
    MatX3 phat = affine_combine(dec, affine_combine(enc, ex.pose.joints));
    MatX2 uv = oracle::project(ex.pose, ex.cam);
    MatX2 uvh = oracle::project(acae::Pose::complete(phat), ex.cam);
    for (int j = 0; j < corpus.joint_count(); ++j)
      sum += jw[j] * (std::abs(uvh(j, 0) - uv(j, 0)) + std::abs(uvh(j, 1) - uv(j, 1)));
  }
  return sum / corpus.size();
}

inline double sparsity_loss(const AcaeWeights& w) {
  Mat enc = normalize_rows(w.raw_encoder());
  Mat dec = normalize_rows(w.raw_decoder());
  double sum = 0.0;
  for (int i = 0; i < enc.rows(); ++i)
    for (int j = 0; j < enc.cols(); ++j) sum += std::abs(enc(i, j));
  for (int i = 0; i < dec.rows(); ++i)
    for (int j = 0; j < dec.cols(); ++j) sum += std::abs(dec(i, j));
  return sum;
}

// Extended-precision replica of the total ACAE loss, evaluated with scalar
// loops in long double so central differences are limited by the step, not by
// double rounding of a large loss value.
using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline LMat to_ld(const Mat& m) { return m.cast<long double>(); }

inline long double total_loss_ld(const AcaeWeights& w, const PoseCorpus& corpus,
                                 const std::vector<int>& idx, const acae::LossConfig& cfg) {
  LMat enc = to_ld(w.raw_encoder());
  LMat dec = to_ld(w.raw_decoder());
  for (int i = 0; i < enc.rows(); ++i) enc.row(i) /= enc.row(i).sum();
  for (int i = 0; i < dec.rows(); ++i) dec.row(i) /= dec.row(i).sum();

  Vec jw_d = cfg.head_weighting ? corpus.catalog.loss_weights()
                                : Vec::Ones(corpus.joint_count());
  std::vector<long double> jw(jw_d.data(), jw_d.data() + jw_d.size());

  std::vector<int> all;
  if (idx.empty())
    for (int k = 0; k < corpus.size(); ++k) all.push_back(k);
  const std::vector<int>& use = idx.empty() ? all : idx;

  long double sum = 0.0L;
  for (int k : use) {
    const auto& ex = corpus.examples[static_cast<std::size_t>(k)];
    LMat p = to_ld(ex.pose.joints);
    LMat q = enc * p;
    LMat phat = dec * q;
    if (!cfg.use_projected) {
      for (int j = 0; j < p.rows(); ++j)
        for (int c = 0; c < 3; ++c) sum += jw[static_cast<std::size_t>(j)] * std::abs(phat(j, c) - p(j, c));
    } else {
      for (int j = 0; j < p.rows(); ++j) {
        long double u = (long double)ex.cam.fx * p(j, 0) / p(j, 2) + (long double)ex.cam.cx;
        long double v = (long double)ex.cam.fy * p(j, 1) / p(j, 2) + (long double)ex.cam.cy;
        long double uh = (long double)ex.cam.fx * phat(j, 0) / phat(j, 2) + (long double)ex.cam.cx;
        long double vh = (long double)ex.cam.fy * phat(j, 1) / phat(j, 2) + (long double)ex.cam.cy;
        sum += jw[static_cast<std::size_t>(j)] * (std::abs(uh - u) + std::abs(vh - v));
      }
    }
  }
  long double total = sum / static_cast<long double>(use.size());
  if (cfg.lambda_sparse != 0.0)
    total += (long double)cfg.lambda_sparse * (enc.cwiseAbs().sum() + dec.cwiseAbs().sum());
  return total;
}

// Central finite differences of the total ACAE loss w.r.t. the raw parameters,
// with exactly representable steps and long double evaluation.
inline Vec fd_gradient(const AcaeWeights& w, const PoseCorpus& corpus,
                       const std::vector<int>& idx, const acae::LossConfig& cfg,
                       double step = 1e-5) {
  AcaeWeights work = w;
  Vec params = acae::pack_params(work);
  Vec grad(params.size());
  for (int i = 0; i < params.size(); ++i) {
    double saved = params[i];
    volatile double up = saved + step;
    volatile double down = saved - step;
    params[i] = up;
    acae::unpack_params(params, work);
    long double hi = total_loss_ld(work, corpus, idx, cfg);
    params[i] = down;
    acae::unpack_params(params, work);
    long double lo = total_loss_ld(work, corpus, idx, cfg);
    params[i] = saved;
    grad[i] = static_cast<double>((hi - lo) / (long double)(up - down));
  }
  acae::unpack_params(params, work);
  return grad;
}

// Scalar metric oracles over jointly valid joints.
inline double mpjpe(const Pose& pred, const Pose& gt, int root) {
  double sum = 0.0;
  int n = 0;
  for (int j = 0; j < pred.joint_count(); ++j) {
    if (!pred.valid[static_cast<std::size_t>(j)] || !gt.valid[static_cast<std::size_t>(j)])
      continue;
    double e2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      double d = (pred.joints(j, c) - pred.joints(root, c)) -
                 (gt.joints(j, c) - gt.joints(root, c));
      e2 += d * d;
    }
    sum += std::sqrt(e2);
    ++n;
  }
  return sum / n;
}

inline double pck(const Pose& pred, const Pose& gt, double thr, int root) {
  int hits = 0, n = 0;
  for (int j = 0; j < pred.joint_count(); ++j) {
    if (!pred.valid[static_cast<std::size_t>(j)] || !gt.valid[static_cast<std::size_t>(j)])
      continue;
    double e2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      double d = (pred.joints(j, c) - pred.joints(root, c)) -
                 (gt.joints(j, c) - gt.joints(root, c));
      e2 += d * d;
    }
    if (std::sqrt(e2) < thr) ++hits;
    ++n;
  }
  return 100.0 * hits / n;
}

inline bool all_within(const Pose& pred, const Pose& gt, double thr, int root) {
  for (int j = 0; j < pred.joint_count(); ++j) {
    if (!pred.valid[static_cast<std::size_t>(j)] || !gt.valid[static_cast<std::size_t>(j)])
      continue;
    double e2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      double d = (pred.joints(j, c) - pred.joints(root, c)) -
                 (gt.joints(j, c) - gt.joints(root, c));
      e2 += d * d;
    }
    if (std::sqrt(e2) >= thr) return false;
  }
  return true;
}

// Mean distance after applying an explicit similarity transform to pred.
inline double similarity_error(const Pose& pred, const Pose& gt, double scale,
                               const acae::Mat3& rot, const acae::Vec3& trans) {
  double sum = 0.0;
  int n = 0;
  for (int j = 0; j < pred.joint_count(); ++j) {
    if (!pred.valid[static_cast<std::size_t>(j)] || !gt.valid[static_cast<std::size_t>(j)])
      continue;
    acae::Vec3 p = scale * (rot * pred.joints.row(j).transpose()) + trans;
    sum += (p - gt.joints.row(j).transpose()).norm();
    ++n;
  }
  return sum / n;
}

// Random generators shared by the suites.
inline Pose random_pose(int j_count, acae::Rng& rng, double spread = 300.0,
                        double depth = 3500.0) {
  MatX3 joints(j_count, 3);
  for (int j = 0; j < j_count; ++j) {
    joints(j, 0) = rng.normal(0.0, spread);
    joints(j, 1) = rng.normal(0.0, spread);
    joints(j, 2) = depth + rng.normal(0.0, spread * 0.5);
  }
  return Pose::complete(std::move(joints));
}

inline CameraModel random_camera(acae::Rng& rng) {
  CameraModel cam;
  cam.fx = rng.uniform(800.0, 1500.0);
  cam.fy = rng.uniform(800.0, 1500.0);
  cam.cx = rng.uniform(400.0, 800.0);
  cam.cy = rng.uniform(400.0, 800.0);
  return cam;
}

inline AcaeWeights random_dense_weights(int l_count, int j_count, acae::Rng& rng,
                                        bool with_negatives = true) {
  AcaeWeights w = AcaeWeights::init_dense(l_count, j_count, rng);
  if (with_negatives) {
    for (int i = 0; i < w.raw_enc.rows(); ++i)
      for (int j = 0; j < w.raw_enc.cols(); ++j) w.raw_enc(i, j) += rng.normal(0.0, 0.3);
    for (int i = 0; i < w.raw_dec.rows(); ++i)
      for (int j = 0; j < w.raw_dec.cols(); ++j) w.raw_dec(i, j) += rng.normal(0.0, 0.3);
  }
  return w;
}

}  // namespace oracle
