#include "model.hpp"

#include <cmath>
#include <limits>

namespace acae {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void normalize_with_sums(const Mat& raw, const std::string& which, Mat& normalized, Vec& sums) {
  normalized.resize(raw.rows(), raw.cols());
  sums.resize(raw.rows());
  for (int i = 0; i < raw.rows(); ++i) {
    double s = raw.row(i).sum();
    if (std::abs(s) < kDegenerateRowSum) throw DegenerateRowError(which, i, s);
    sums[i] = s;
    normalized.row(i) = raw.row(i) / s;
  }
}

// Row sums of the assembled matrix computed block-wise, so a mirrored row pair
// shares one bitwise-identical sum and normalization preserves the chiral
// pattern exactly.
Vec chiral_row_sums(const ChiralBlocks& b, const std::string& which) {
  Vec s(b.rows());
  for (int i = 0; i < b.paired_rows(); ++i) {
    double sum = b.w1.row(i).sum() + b.w2.row(i).sum() + b.w3.row(i).sum();
    if (std::abs(sum) < kDegenerateRowSum) throw DegenerateRowError(which, i, sum);
    s[i] = sum;
    s[b.paired_rows() + i] = sum;
  }
  for (int i = 0; i < b.center_rows(); ++i) {
    double sum = 2.0 * b.w4.row(i).sum() + b.w5.row(i).sum();
    if (std::abs(sum) < kDegenerateRowSum)
      throw DegenerateRowError(which, 2 * b.paired_rows() + i, sum);
    s[2 * b.paired_rows() + i] = sum;
  }
  return s;
}

void normalize_weights(const AcaeWeights& w, bool encoder_side, const std::string& which,
                       Mat& normalized, Vec& sums) {
  if (w.chiral) {
    const ChiralBlocks& b = encoder_side ? w.enc_blocks : w.dec_blocks;
    sums = chiral_row_sums(b, which);
    normalized = assemble_chiral(b);
    for (int i = 0; i < normalized.rows(); ++i) normalized.row(i) /= sums[i];
  } else {
    normalize_with_sums(encoder_side ? w.raw_enc : w.raw_dec, which, normalized, sums);
  }
}

// d/d(raw) of a function given its gradient w.r.t. the row-normalized matrix.
Mat norm_backprop(const Mat& grad_n, const Mat& normalized, const Vec& sums) {
  Mat g(normalized.rows(), normalized.cols());
  for (int i = 0; i < normalized.rows(); ++i) {
    double d = grad_n.row(i).dot(normalized.row(i));
    g.row(i) = (grad_n.row(i).array() - d) / sums[i];
  }
  return g;
}

Mat sign_matrix(const Mat& m) {
  return m.unaryExpr([](double x) { return sgn(x); });
}

}  // namespace

Mat normalize_rows(const Mat& raw, const std::string& which) {
  Mat n;
  Vec s;
  normalize_with_sums(raw, which, n, s);
  return n;
}

void ChiralBlocks::validate() const {
  require(w2.rows() == w1.rows() && w2.cols() == w1.cols() && w3.rows() == w1.rows() &&
              w4.cols() == w1.cols() && w5.rows() == w4.rows() && w5.cols() == w3.cols(),
          Err::ShapeMismatch, "inconsistent chiral block shapes");
}

int ChiralBlocks::param_count() const {
  return static_cast<int>(w1.size() + w2.size() + w3.size() + w4.size() + w5.size());
}

Mat assemble_chiral(const ChiralBlocks& b) {
  b.validate();
  const int a = b.paired_rows(), e = b.center_rows(), p = b.paired_cols(), c = b.center_cols();
  Mat m(2 * a + e, 2 * p + c);
  m.block(0, 0, a, p) = b.w1;
  m.block(0, p, a, p) = b.w2;
  m.block(0, 2 * p, a, c) = b.w3;
  m.block(a, 0, a, p) = b.w2;
  m.block(a, p, a, p) = b.w1;
  m.block(a, 2 * p, a, c) = b.w3;
  m.block(2 * a, 0, e, p) = b.w4;
  m.block(2 * a, p, e, p) = b.w4;
  m.block(2 * a, 2 * p, e, c) = b.w5;
  return m;
}

ChiralBlocks ChiralBlocks::gather_gradient(const Mat& g) const {
  const int a = paired_rows(), e = center_rows(), p = paired_cols(), c = center_cols();
  require(g.rows() == rows() && g.cols() == cols(), Err::ShapeMismatch,
          "gradient shape does not match assembled matrix");
  ChiralBlocks out;
  out.w1 = g.block(0, 0, a, p) + g.block(a, p, a, p);
  out.w2 = g.block(0, p, a, p) + g.block(a, 0, a, p);
  out.w3 = g.block(0, 2 * p, a, c) + g.block(a, 2 * p, a, c);
  out.w4 = g.block(2 * a, 0, e, p) + g.block(2 * a, p, e, p);
  out.w5 = g.block(2 * a, 2 * p, e, c);
  return out;
}

ChiralBlocks ChiralBlocks::random(int paired_rows, int center_rows, int paired_cols,
                                  int center_cols, Rng& rng) {
  auto draw = [&rng](int r, int c) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.uniform_open();
    return m;
  };
  ChiralBlocks b;
  b.w1 = draw(paired_rows, paired_cols);
  b.w2 = draw(paired_rows, paired_cols);
  b.w3 = draw(paired_rows, center_cols);
  b.w4 = draw(center_rows, paired_cols);
  b.w5 = draw(center_rows, center_cols);
  return b;
}

int AcaeWeights::joint_count() const {
  return chiral ? dec_blocks.rows() : static_cast<int>(raw_dec.rows());
}

int AcaeWeights::latent_count() const {
  return chiral ? enc_blocks.rows() : static_cast<int>(raw_enc.rows());
}

Mat AcaeWeights::raw_encoder() const { return chiral ? assemble_chiral(enc_blocks) : raw_enc; }
Mat AcaeWeights::raw_decoder() const { return chiral ? assemble_chiral(dec_blocks) : raw_dec; }

Mat AcaeWeights::encoder() const {
  Mat n;
  Vec s;
  normalize_weights(*this, true, "encoder", n, s);
  return n;
}

Mat AcaeWeights::decoder() const {
  Mat n;
  Vec s;
  normalize_weights(*this, false, "decoder", n, s);
  return n;
}

namespace {

void normalize_blocks(ChiralBlocks& b, const std::string& which) {
  for (int i = 0; i < b.paired_rows(); ++i) {
    double s = b.w1.row(i).sum() + b.w2.row(i).sum() + b.w3.row(i).sum();
    if (std::abs(s) < kDegenerateRowSum) throw DegenerateRowError(which, i, s);
    b.w1.row(i) /= s;
    b.w2.row(i) /= s;
    b.w3.row(i) /= s;
  }
  for (int i = 0; i < b.center_rows(); ++i) {
    double s = 2.0 * b.w4.row(i).sum() + b.w5.row(i).sum();
    if (std::abs(s) < kDegenerateRowSum)
      throw DegenerateRowError(which, 2 * b.paired_rows() + i, s);
    b.w4.row(i) /= s;
    b.w5.row(i) /= s;
  }
}

}  // namespace

void AcaeWeights::normalize_in_place() {
  if (chiral) {
    normalize_blocks(enc_blocks, "encoder");
    normalize_blocks(dec_blocks, "decoder");
  } else {
    raw_enc = normalize_rows(raw_enc, "encoder");
    raw_dec = normalize_rows(raw_dec, "decoder");
  }
}

AcaeWeights AcaeWeights::init_dense(int latent_count, int joint_count, Rng& rng) {
  require(latent_count >= 1 && joint_count >= 1, Err::InvalidArgument,
          "latent and joint counts must be positive");
  AcaeWeights w;
  w.chiral = false;
  w.raw_enc.resize(latent_count, joint_count);
  for (int i = 0; i < latent_count; ++i)
    for (int j = 0; j < joint_count; ++j) w.raw_enc(i, j) = rng.uniform_open();
  w.raw_dec.resize(joint_count, latent_count);
  for (int i = 0; i < joint_count; ++i)
    for (int j = 0; j < latent_count; ++j) w.raw_dec(i, j) = rng.uniform_open();
  return w;
}

AcaeWeights AcaeWeights::init_chiral(const LatentPartition& partition, const JointCatalog& catalog,
                                     Rng& rng) {
  require(catalog.n_left == catalog.n_right, Err::PartitionMismatch,
          "catalog left/right blocks differ in size");
  AcaeWeights w;
  w.chiral = true;
  w.enc_blocks =
      ChiralBlocks::random(partition.n_left, partition.n_center, catalog.n_left, catalog.n_center, rng);
  w.dec_blocks =
      ChiralBlocks::random(catalog.n_left, catalog.n_center, partition.n_left, partition.n_center, rng);
  w.catalog_hash = catalog.hash();
  return w;
}

LatentPose encode(const AcaeWeights& w, const Pose& pose) {
  require(pose.joint_count() == w.joint_count(), Err::ShapeMismatch,
          "pose joint count does not match weights");
  require(pose.all_valid(), Err::IncompleteInput, "encode requires a complete pose");
  LatentPose q;
  q.latents = w.encoder() * pose.joints;
  return q;
}

Pose decode(const AcaeWeights& w, const LatentPose& q) {
  require(q.latent_count() == w.latent_count(), Err::ShapeMismatch,
          "latent count does not match weights");
  return Pose::complete(w.decoder() * q.latents);
}

int param_count(const AcaeWeights& w) {
  if (w.chiral) return w.enc_blocks.param_count() + w.dec_blocks.param_count();
  return static_cast<int>(w.raw_enc.size() + w.raw_dec.size());
}

namespace {

void copy_out(const Mat& m, Vec& v, int& off) {
  Eigen::Map<const Vec> flat(m.data(), m.size());
  v.segment(off, m.size()) = flat;
  off += static_cast<int>(m.size());
}

void copy_in(Mat& m, const Vec& v, int& off) {
  Eigen::Map<Vec>(m.data(), m.size()) = v.segment(off, m.size());
  off += static_cast<int>(m.size());
}

template <typename Fn>
void for_each_param_matrix(AcaeWeights& w, Fn&& fn) {
  if (w.chiral) {
    for (ChiralBlocks* b : {&w.enc_blocks, &w.dec_blocks}) {
      fn(b->w1);
      fn(b->w2);
      fn(b->w3);
      fn(b->w4);
      fn(b->w5);
    }
  } else {
    fn(w.raw_enc);
    fn(w.raw_dec);
  }
}

}  // namespace

Vec pack_params(const AcaeWeights& w) {
  Vec v(param_count(w));
  int off = 0;
  for_each_param_matrix(const_cast<AcaeWeights&>(w),
                        [&](Mat& m) { copy_out(m, v, off); });
  return v;
}

void unpack_params(const Vec& params, AcaeWeights& w) {
  require(params.size() == param_count(w), Err::ShapeMismatch,
          "parameter vector size does not match weights");
  int off = 0;
  for_each_param_matrix(w, [&](Mat& m) { copy_in(m, params, off); });
}

namespace {

struct LossWork {
  // Forward state
  Vec enc_sums, dec_sums;
  Mat enc_n, dec_n;
  // Accumulated gradient w.r.t. the normalized matrices
  Mat g_enc_n, g_dec_n;
};

// Adds one example's reconstruction term; returns the example loss.
double example_loss(LossWork& work, const Pose& pose, const CameraModel& cam, const Vec& jw,
                    bool projected, bool want_grad) {
  require(pose.all_valid(), Err::IncompleteInput,
          "autoencoder losses require complete poses");
  const MatX3& p = pose.joints;
  MatX3 q = work.enc_n * p;
  MatX3 phat = work.dec_n * q;
  const int j_count = static_cast<int>(p.rows());

  double loss = 0.0;
  MatX3 dl_dphat;  // populated when want_grad
  if (want_grad) dl_dphat = MatX3::Zero(j_count, 3);

  if (!projected) {
    MatX3 r = phat - p;
    for (int j = 0; j < j_count; ++j) {
      loss += jw[j] * r.row(j).cwiseAbs().sum();
      if (want_grad)
        dl_dphat.row(j) = jw[j] * r.row(j).unaryExpr([](double x) { return sgn(x); });
    }
  } else {
    cam.validate();
    for (int j = 0; j < j_count; ++j) {
      double z = p(j, 2), zh = phat(j, 2);
      require(z >= kMinDepthMm, Err::DepthTooSmall,
              "pose joint " + std::to_string(j) + " too close to camera");
      require(zh >= kMinDepthMm, Err::DepthTooSmall,
              "reconstructed joint " + std::to_string(j) + " too close to camera");
      double u = cam.fx * p(j, 0) / z + cam.cx;
      double v = cam.fy * p(j, 1) / z + cam.cy;
      double uh = cam.fx * phat(j, 0) / zh + cam.cx;
      double vh = cam.fy * phat(j, 1) / zh + cam.cy;
      loss += jw[j] * (std::abs(uh - u) + std::abs(vh - v));
      if (want_grad) {
        double su = jw[j] * sgn(uh - u);
        double sv = jw[j] * sgn(vh - v);
        dl_dphat(j, 0) = su * cam.fx / zh;
        dl_dphat(j, 1) = sv * cam.fy / zh;
        dl_dphat(j, 2) = -su * cam.fx * phat(j, 0) / (zh * zh) - sv * cam.fy * phat(j, 1) / (zh * zh);
      }
    }
  }

  if (want_grad) {
    work.g_dec_n.noalias() += dl_dphat * q.transpose();
    MatX3 dl_dq = work.dec_n.transpose() * dl_dphat;
    work.g_enc_n.noalias() += dl_dq * p.transpose();
  }
  return loss;
}

LossTerms loss_impl(const AcaeWeights& w, const PoseCorpus& corpus,
                    const std::vector<int>& indices, const LossConfig& cfg, Vec* grad_out) {
  require(corpus.size() > 0, Err::EmptyCorpus, "loss over an empty corpus");
  require(corpus.joint_count() == w.joint_count(), Err::ShapeMismatch,
          "corpus joint count does not match weights");

  LossWork work;
  normalize_weights(w, true, "encoder", work.enc_n, work.enc_sums);
  normalize_weights(w, false, "decoder", work.dec_n, work.dec_sums);

  const bool want_grad = grad_out != nullptr;
  if (want_grad) {
    work.g_enc_n = Mat::Zero(work.enc_n.rows(), work.enc_n.cols());
    work.g_dec_n = Mat::Zero(work.dec_n.rows(), work.dec_n.cols());
  }

  Vec jw = cfg.head_weighting ? corpus.catalog.loss_weights()
                              : Vec::Ones(corpus.joint_count());

  double sum = 0.0;
  int n = 0;
  auto visit = [&](int k) {
    const auto& ex = corpus.examples[static_cast<std::size_t>(k)];
    sum += example_loss(work, ex.pose, ex.cam, jw, cfg.use_projected, want_grad);
    ++n;
  };
  if (indices.empty()) {
    for (int k = 0; k < corpus.size(); ++k) visit(k);
  } else {
    for (int k : indices) {
      require(k >= 0 && k < corpus.size(), Err::InvalidArgument, "example index out of range");
      visit(k);
    }
  }
  require(n > 0, Err::EmptyCorpus, "loss over an empty example selection");

  LossTerms terms;
  double mean = sum / n;
  if (cfg.use_projected) {
    terms.reconstr_proj = mean;
    terms.reconstr = std::numeric_limits<double>::quiet_NaN();
  } else {
    terms.reconstr = mean;
    terms.reconstr_proj = std::numeric_limits<double>::quiet_NaN();
  }
  terms.sparse = work.enc_n.cwiseAbs().sum() + work.dec_n.cwiseAbs().sum();
  terms.total = mean + cfg.lambda_sparse * terms.sparse;

  if (want_grad) {
    work.g_enc_n /= n;
    work.g_dec_n /= n;
    if (cfg.lambda_sparse != 0.0) {
      work.g_enc_n += cfg.lambda_sparse * sign_matrix(work.enc_n);
      work.g_dec_n += cfg.lambda_sparse * sign_matrix(work.dec_n);
    }
    Mat g_enc_raw = norm_backprop(work.g_enc_n, work.enc_n, work.enc_sums);
    Mat g_dec_raw = norm_backprop(work.g_dec_n, work.dec_n, work.dec_sums);

    grad_out->resize(param_count(w));
    int off = 0;
    if (w.chiral) {
      ChiralBlocks ge = w.enc_blocks.gather_gradient(g_enc_raw);
      ChiralBlocks gd = w.dec_blocks.gather_gradient(g_dec_raw);
      for (const ChiralBlocks* b : {&ge, &gd})
        for (const Mat* m : {&b->w1, &b->w2, &b->w3, &b->w4, &b->w5}) copy_out(*m, *grad_out, off);
    } else {
      copy_out(g_enc_raw, *grad_out, off);
      copy_out(g_dec_raw, *grad_out, off);
    }
  }
  return terms;
}

double standalone_loss(const AcaeWeights& w, const PoseCorpus& corpus, const Vec& loss_weights,
                       bool projected) {
  require(corpus.size() > 0, Err::EmptyCorpus, "loss over an empty corpus");
  require(loss_weights.size() == corpus.joint_count(), Err::ShapeMismatch,
          "loss weight vector does not match corpus joint count");
  LossWork work;
  normalize_weights(w, true, "encoder", work.enc_n, work.enc_sums);
  normalize_weights(w, false, "decoder", work.dec_n, work.dec_sums);
  double sum = 0.0;
  for (const auto& ex : corpus.examples)
    sum += example_loss(work, ex.pose, ex.cam, loss_weights, projected, false);
  return sum / corpus.size();
}

}  // namespace

double reconstruction_loss(const AcaeWeights& w, const PoseCorpus& corpus,
                           const Vec& loss_weights) {
  return standalone_loss(w, corpus, loss_weights, false);
}

double projected_reconstruction_loss(const AcaeWeights& w, const PoseCorpus& corpus,
                                     const Vec& loss_weights) {
  return standalone_loss(w, corpus, loss_weights, true);
}

double sparsity_loss(const AcaeWeights& w) {
  return w.encoder().cwiseAbs().sum() + w.decoder().cwiseAbs().sum();
}

LossTerms eval_loss(const AcaeWeights& w, const PoseCorpus& corpus,
                    const std::vector<int>& indices, const LossConfig& cfg) {
  return loss_impl(w, corpus, indices, cfg, nullptr);
}

LossTerms loss_and_gradient(const AcaeWeights& w, const PoseCorpus& corpus,
                            const std::vector<int>& indices, const LossConfig& cfg,
                            Vec& grad_out) {
  return loss_impl(w, corpus, indices, cfg, &grad_out);
}

}  // namespace acae
