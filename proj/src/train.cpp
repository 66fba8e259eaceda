#include "train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace acae {

void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr) {
  require(params.size() == grads.size() && params.size() == state.m.size() &&
              params.size() == state.v.size(),
          Err::ShapeMismatch, "adam: parameter/gradient/state shapes differ");
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  Vec mhat = state.m / bc1;
  Vec vhat = state.v / bc2;
  params.array() -= lr * mhat.array() / (vhat.array().sqrt() + state.epsilon);
}

void TrainConfig::validate() const {
  require(latent_count >= 1, Err::ConfigInvalid, "latent count must be >= 1");
  require(learning_rate > 0.0, Err::ConfigInvalid, "learning rate must be > 0");
  require(lr_final >= 0.0 && (lr_final == 0.0 || lr_final <= learning_rate), Err::ConfigInvalid,
          "lr_final must be 0 or <= learning_rate");
  require(steps >= 0, Err::ConfigInvalid, "step count must be >= 0");
  require(batch_size >= 1, Err::ConfigInvalid, "batch size must be >= 1");
  require(lambda_sparse >= 0.0, Err::ConfigInvalid, "lambda_sparse must be >= 0");
  require(val_fraction >= 0.0 && val_fraction < 1.0, Err::ConfigInvalid,
          "val_fraction must be in [0, 1)");
  require(log_every >= 1, Err::ConfigInvalid, "log_every must be >= 1");
}

void TrainLog::save_csv(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write train log: " + path);
  out << "step,total,reconstr,sparse\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.step, r.total, r.reconstr,
                  r.sparse);
    out << buf;
  }
  require(out.good(), Err::Io, "write failed: " + path);
}

namespace {

// Redraws the raw parameters behind one assembled-matrix row.
void reinit_row(AcaeWeights& w, const std::string& which, int row, Rng& rng) {
  auto redraw = [&rng](Mat& m, int i) {
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform_open();
  };
  if (!w.chiral) {
    Mat& m = (which == "encoder") ? w.raw_enc : w.raw_dec;
    require(row >= 0 && row < m.rows(), Err::InvalidArgument, "reinit row out of range");
    redraw(m, row);
    return;
  }
  ChiralBlocks& b = (which == "encoder") ? w.enc_blocks : w.dec_blocks;
  int a = b.paired_rows();
  if (row < 2 * a) {
    int i = row < a ? row : row - a;
    redraw(b.w1, i);
    redraw(b.w2, i);
    redraw(b.w3, i);
  } else {
    int i = row - 2 * a;
    redraw(b.w4, i);
    redraw(b.w5, i);
  }
}

std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  return idx;
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

std::pair<AcaeWeights, TrainLog> fit_acae(const PoseCorpus& corpus, const TrainConfig& cfg,
                                          const AcaeWeights* init) {
  cfg.validate();
  corpus.validate();
  const int j_count = corpus.joint_count();
  for (const auto& ex : corpus.examples)
    require(ex.pose.all_valid(), Err::IncompleteInput,
            "fit_acae requires a complete (unmasked) corpus");

  // Train/validation partition for the final report.
  std::vector<int> order = shuffled_indices(corpus.size(), derive_seed(cfg.seed, "split"));
  int n_val = static_cast<int>(std::lround(cfg.val_fraction * corpus.size()));
  if (corpus.size() - n_val < 1) n_val = corpus.size() - 1;
  std::vector<int> train_idx(order.begin(), order.end() - n_val);
  std::vector<int> val_idx(order.end() - n_val, order.end());

  AcaeWeights w;
  Rng init_rng(derive_seed(cfg.seed, "init"));
  if (init) {
    require(init->joint_count() == j_count && init->latent_count() == cfg.latent_count,
            Err::ShapeMismatch, "initial weights do not match corpus/config");
    w = *init;
  } else if (cfg.chirality) {
    LatentPartition part = latent_partition(corpus.catalog, cfg.latent_count);
    w = AcaeWeights::init_chiral(part, corpus.catalog, init_rng);
  } else {
    w = AcaeWeights::init_dense(cfg.latent_count, j_count, init_rng);
  }
  w.catalog_hash = corpus.catalog.hash();

  LossConfig loss_cfg;
  loss_cfg.use_projected = cfg.use_projected_loss;
  loss_cfg.lambda_sparse = cfg.lambda_sparse;
  loss_cfg.head_weighting = cfg.head_weighting;

  Vec params = pack_params(w);
  AdamState state = AdamState::for_size(params.size());
  TrainLog log;

  const int n_train = static_cast<int>(train_idx.size());
  const int batches_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  int step = 0;
  int epoch = 0;
  Rng reinit_rng(derive_seed(cfg.seed, "reinit"));
  std::vector<int> epoch_order;
  while (step < cfg.steps) {
    {
      Rng shuffle_rng(derive_seed(cfg.seed + static_cast<std::uint64_t>(epoch), "shuffle"));
      epoch_order = train_idx;
      shuffle_rng.shuffle(epoch_order.begin(), epoch_order.end());
    }
    for (int b = 0; b < batches_per_epoch && step < cfg.steps; ++b) {
      int lo = b * cfg.batch_size;
      int hi = std::min(n_train, lo + cfg.batch_size);
      std::vector<int> batch(epoch_order.begin() + lo, epoch_order.begin() + hi);

      Vec grad;
      LossTerms terms;
      for (;;) {
        try {
          unpack_params(params, w);
          terms = loss_and_gradient(w, corpus, batch, loss_cfg, grad);
          break;
        } catch (const DegenerateRowError& e) {
          require(log.reinit_count < 3, Err::DegenerateRow,
                  std::string("degenerate rows persist after 3 re-initializations: ") + e.what());
          ++log.reinit_count;
          reinit_row(w, e.which(), e.row(), reinit_rng);
          params = pack_params(w);
          state = AdamState::for_size(params.size());
        }
      }

      double lr = cfg.learning_rate;
      if (cfg.lr_final > 0.0 && cfg.steps > 1)
        lr *= std::pow(cfg.lr_final / cfg.learning_rate,
                       static_cast<double>(step) / static_cast<double>(cfg.steps - 1));
      adam_step(params, grad, state, lr);
      ++step;
      if (step % cfg.log_every == 0 || step == cfg.steps) {
        TrainRecord rec;
        rec.step = step;
        rec.total = terms.total;
        rec.reconstr = cfg.use_projected_loss ? terms.reconstr_proj : terms.reconstr;
        rec.sparse = terms.sparse;
        log.records.push_back(rec);
      }
    }
    ++epoch;
  }

  unpack_params(params, w);
  w.normalize_in_place();

  const std::vector<int>& report_idx = val_idx.empty() ? train_idx : val_idx;
  {
    LossConfig c3 = loss_cfg;
    c3.use_projected = false;
    c3.lambda_sparse = 0.0;
    log.final_val_reconstr_mm = eval_loss(w, corpus, report_idx, c3).reconstr;
    LossConfig cp = c3;
    cp.use_projected = true;
    try {
      log.final_val_reconstr_px = eval_loss(w, corpus, report_idx, cp).reconstr_proj;
    } catch (const Error&) {
      log.final_val_reconstr_px = nan_value();
    }
  }
  return {std::move(w), std::move(log)};
}

namespace {

// Adds a relative ridge when the Gram matrix is rank-deficient.
void ridge_if_needed(Mat& gram, bool* ridged) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  double max_eig = eig.eigenvalues().cwiseAbs().maxCoeff();
  double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig <= 1e-10 * std::max(max_eig, 1.0)) {
    gram.diagonal().array() += 1e-8 * std::max(max_eig, 1.0);
    if (ridged) *ridged = true;
  }
}

}  // namespace

Mat solve_decoder_least_squares(const Mat& enc_normalized, const PoseCorpus& corpus, bool* ridged) {
  corpus.validate();
  require(enc_normalized.cols() == corpus.joint_count(), Err::ShapeMismatch,
          "encoder columns do not match corpus joints");
  if (ridged) *ridged = false;
  const int l_count = static_cast<int>(enc_normalized.rows());

  Mat gram = Mat::Zero(l_count, l_count);
  Mat cross = Mat::Zero(l_count, corpus.joint_count());
  for (const auto& ex : corpus.examples) {
    require(ex.pose.all_valid(), Err::IncompleteInput, "least squares requires complete poses");
    MatX3 q = enc_normalized * ex.pose.joints;
    gram.noalias() += q * q.transpose();
    cross.noalias() += q * ex.pose.joints.transpose();
  }
  ridge_if_needed(gram, ridged);

  // Equality-constrained normal equations, one KKT factorization shared by all rows.
  Mat kkt = Mat::Zero(l_count + 1, l_count + 1);
  kkt.topLeftCorner(l_count, l_count) = gram;
  kkt.block(0, l_count, l_count, 1).setOnes();
  kkt.block(l_count, 0, 1, l_count).setOnes();
  Mat rhs(l_count + 1, corpus.joint_count());
  rhs.topRows(l_count) = cross;
  rhs.bottomRows(1).setOnes();
  Eigen::PartialPivLU<Mat> lu(kkt);
  Mat sol = lu.solve(rhs);
  require(sol.allFinite(), Err::SingularSystem, "decoder least-squares system is singular");
  return sol.topRows(l_count).transpose();
}

Mat solve_encoder_least_squares(const Mat& dec_normalized, const PoseCorpus& corpus, bool* ridged) {
  corpus.validate();
  require(dec_normalized.rows() == corpus.joint_count(), Err::ShapeMismatch,
          "decoder rows do not match corpus joints");
  if (ridged) *ridged = false;
  const int j_count = corpus.joint_count();
  const int l_count = static_cast<int>(dec_normalized.cols());

  Mat s = Mat::Zero(j_count, j_count);
  for (const auto& ex : corpus.examples) {
    require(ex.pose.all_valid(), Err::IncompleteInput, "least squares requires complete poses");
    s.noalias() += ex.pose.joints * ex.pose.joints.transpose();
  }
  ridge_if_needed(s, ridged);
  Mat a = dec_normalized.transpose() * dec_normalized;  // L x L
  bool a_ridged = false;
  ridge_if_needed(a, &a_ridged);
  if (a_ridged && ridged) *ridged = true;

  // Stationarity: A * E * S = D^T S - mu * 1^T with row-sum constraints E 1 = 1.
  Eigen::LDLT<Mat> s_fact(s);
  Eigen::LDLT<Mat> a_fact(a);
  Vec ones_j = Vec::Ones(j_count);
  Vec s_inv_ones = s_fact.solve(ones_j);
  double denom = ones_j.dot(s_inv_ones);
  require(std::isfinite(denom) && std::abs(denom) > 1e-300, Err::SingularSystem,
          "encoder least-squares system is singular");
  Vec mu = (dec_normalized.transpose() * ones_j - a * Vec::Ones(l_count)) / denom;
  Mat num = dec_normalized.transpose() * s - mu * ones_j.transpose();
  // E = A^{-1} * num * S^{-1}
  Mat e = a_fact.solve(num);
  e = s_fact.solve(e.transpose()).transpose();
  require(e.allFinite(), Err::SingularSystem, "encoder least-squares solve failed");
  return e;
}

namespace {

double squared_recon_loss(const Mat& enc, const Mat& dec, const PoseCorpus& corpus) {
  double sum = 0.0;
  Mat map = dec * enc;
  for (const auto& ex : corpus.examples)
    sum += (map * ex.pose.joints - ex.pose.joints).squaredNorm();
  return sum / corpus.size();
}

}  // namespace

AlsResult als_fit(const PoseCorpus& corpus, int latent_count, int max_iters, std::uint64_t seed) {
  corpus.validate();
  require(latent_count >= 1 && latent_count <= corpus.joint_count(), Err::ConfigInvalid,
          "latent count out of range");
  // The row-sum constraints make the residual invariant to one shared
  // translation, so the solves run on globally centered copies; that only
  // improves the conditioning of the Gram systems, the optimal weights are
  // unchanged.
  PoseCorpus centered = corpus;
  Eigen::RowVector3d global_mean = Eigen::RowVector3d::Zero();
  for (const auto& ex : centered.examples) global_mean += ex.pose.joints.colwise().mean();
  global_mean /= centered.size();
  for (auto& ex : centered.examples) ex.pose.joints.rowwise() -= global_mean;
  Rng rng(derive_seed(seed, "als-init"));
  Mat enc = normalize_rows(AcaeWeights::init_dense(latent_count, corpus.joint_count(), rng).raw_enc,
                           "encoder");
  Mat best_enc = enc, best_dec;
  double best = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iters; ++it) {
    Mat dec = solve_decoder_least_squares(enc, centered);
    double loss = squared_recon_loss(enc, dec, centered);
    bool improved = loss < best - 1e-12 * std::max(1.0, best);
    if (loss < best) {
      best = loss;
      best_enc = enc;
      best_dec = dec;
    }
    // The encoder step can regress when a Gram system needed ridging; keep
    // the best pair and stop once a round no longer improves it.
    if (!improved && it > 0) break;
    enc = solve_encoder_least_squares(dec, centered);
  }
  AlsResult out;
  out.weights.chiral = false;
  out.weights.raw_enc = best_enc;
  out.weights.raw_dec = best_dec;
  out.weights.catalog_hash = corpus.catalog.hash();
  out.squared_loss = squared_recon_loss(best_enc, best_dec, corpus);
  out.iterations = it + 1;
  return out;
}

double map_projected_error_mm(const Mat& recon_map, const PoseCorpus& corpus) {
  corpus.validate();
  require(recon_map.rows() == corpus.joint_count() && recon_map.cols() == corpus.joint_count(),
          Err::ShapeMismatch, "reconstruction map must be JxJ");
  double sum = 0.0;
  for (const auto& ex : corpus.examples) {
    require(ex.pose.all_valid(), Err::IncompleteInput, "projected error requires complete poses");
    MatX3 phat = recon_map * ex.pose.joints;
    double ex_sum = 0.0;
    for (int j = 0; j < corpus.joint_count(); ++j) {
      double z = ex.pose.joints(j, 2), zh = phat(j, 2);
      require(z >= kMinDepthMm && zh >= kMinDepthMm, Err::DepthTooSmall,
              "joint too close to camera in projected error");
      double du = ex.cam.fx * (phat(j, 0) / zh - ex.pose.joints(j, 0) / z);
      double dv = ex.cam.fy * (phat(j, 1) / zh - ex.pose.joints(j, 1) / z);
      ex_sum += std::sqrt(du * du + dv * dv) * z / ex.cam.fx;
    }
    sum += ex_sum / corpus.joint_count();
  }
  return sum / corpus.size();
}

double acae_projected_error_mm(const AcaeWeights& w, const PoseCorpus& corpus) {
  return map_projected_error_mm(w.decoder() * w.encoder(), corpus);
}

double map_reconstruction_loss(const Mat& recon_map, const PoseCorpus& corpus, const Vec& jw) {
  corpus.validate();
  require(recon_map.rows() == corpus.joint_count() && recon_map.cols() == corpus.joint_count(),
          Err::ShapeMismatch, "reconstruction map must be JxJ");
  require(jw.size() == corpus.joint_count(), Err::ShapeMismatch, "weight vector size mismatch");
  double sum = 0.0;
  for (const auto& ex : corpus.examples) {
    MatX3 r = recon_map * ex.pose.joints - ex.pose.joints;
    for (int j = 0; j < corpus.joint_count(); ++j) sum += jw[j] * r.row(j).cwiseAbs().sum();
  }
  return sum / corpus.size();
}

std::vector<ElbowPoint> elbow_curve(const PoseCorpus& corpus, const std::vector<int>& l_values,
                                    const TrainConfig& cfg) {
  require(!l_values.empty(), Err::InvalidArgument, "elbow sweep needs at least one latent count");
  corpus.validate();
  std::vector<int> order = shuffled_indices(corpus.size(), derive_seed(cfg.seed, "elbow-split"));
  int n_val = std::max(1, static_cast<int>(std::lround(0.1 * corpus.size())));
  require(corpus.size() - n_val >= 1, Err::EmptyCorpus, "corpus too small for an elbow split");
  std::vector<int> train_idx(order.begin(), order.end() - n_val);
  std::vector<int> val_idx(order.end() - n_val, order.end());
  PoseCorpus train = corpus.subset(train_idx);
  PoseCorpus val = corpus.subset(val_idx);

  std::vector<ElbowPoint> points(l_values.size());
  parallel_tasks(static_cast<int>(l_values.size()), [&](int i) {
    TrainConfig fit_cfg = cfg;
    fit_cfg.latent_count = l_values[static_cast<std::size_t>(i)];
    fit_cfg.val_fraction = 0.0;
    fit_cfg.seed = derive_seed(cfg.seed, "elbow-L" + std::to_string(fit_cfg.latent_count));
    auto [w, log] = fit_acae(train, fit_cfg);
    points[static_cast<std::size_t>(i)] = {fit_cfg.latent_count, acae_projected_error_mm(w, val)};
  });
  return points;
}

}  // namespace acae
