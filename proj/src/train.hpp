#pragma once

#include "model.hpp"

namespace acae {

struct AdamState {
  Vec m;
  Vec v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(Eigen::Index n) {
    AdamState s;
    s.m = Vec::Zero(n);
    s.v = Vec::Zero(n);
    return s;
  }
};

// Bias-corrected Adam update, in place.
void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr);

struct TrainConfig {
  int latent_count = 48;
  double learning_rate = 1e-3;
  // When > 0, the learning rate decays exponentially from learning_rate to
  // lr_final over the run. Default is a flat rate.
  double lr_final = 0.0;
  int steps = 20000;
  int batch_size = 32;
  double lambda_sparse = 0.0;
  bool use_projected_loss = false;
  bool chirality = true;
  bool head_weighting = true;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;  // held out for the final validation report
  int log_every = 1;

  void validate() const;
};

struct TrainRecord {
  int step = 0;
  double total = 0.0;
  double reconstr = 0.0;  // the configured reconstruction term (mm 3D / px projected)
  double sparse = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  double final_val_reconstr_mm = 0.0;   // weighted l1 mean on held-out, NaN if unavailable
  double final_val_reconstr_px = 0.0;
  int reinit_count = 0;

  void save_csv(const std::string& path) const;  // columns: step,total,reconstr,sparse
};

// Mini-batch Adam on the ACAE objective. Returns weights in normalized
// representation (row sums 1 within 1e-12). `init` overrides the seeded
// uniform(0,1) initialization when provided.
std::pair<AcaeWeights, TrainLog> fit_acae(const PoseCorpus& corpus, const TrainConfig& cfg,
                                          const AcaeWeights* init = nullptr);

// Closed-form row-constrained least squares: min ||P - W_dec Q||^2 with each
// row of W_dec summing to 1, Q = enc_normalized * P. Sets *ridged when the
// latent Gram matrix needed ridge regularization.
Mat solve_decoder_least_squares(const Mat& enc_normalized, const PoseCorpus& corpus,
                                bool* ridged = nullptr);

// Companion step: optimal row-constrained encoder for a fixed decoder.
Mat solve_encoder_least_squares(const Mat& dec_normalized, const PoseCorpus& corpus,
                                bool* ridged = nullptr);

struct AlsResult {
  AcaeWeights weights;     // dense, normalized representation
  double squared_loss = 0.0;  // mean per example of ||P - W_dec W_enc P||_F^2
  int iterations = 0;
};

// Alternating least squares on the squared-error surrogate (lambda_sparse
// treated as 0); the optimization-quality oracle for fit_acae.
AlsResult als_fit(const PoseCorpus& corpus, int latent_count, int max_iters, std::uint64_t seed);

struct ElbowPoint {
  int latent_count = 0;
  double val_projected_err_mm = 0.0;
};

// One fit per L on a seeded 90/10 split; reports held-out projected error.
std::vector<ElbowPoint> elbow_curve(const PoseCorpus& corpus, const std::vector<int>& l_values,
                                    const TrainConfig& cfg);

// Mean over examples and joints of the pixel distance between the projections
// of pose and reconstruction, scaled to mm at the ground-truth joint depth.
double map_projected_error_mm(const Mat& recon_map, const PoseCorpus& corpus);
double acae_projected_error_mm(const AcaeWeights& w, const PoseCorpus& corpus);

// Weighted l1 reconstruction loss of an arbitrary linear map P -> map*P.
double map_reconstruction_loss(const Mat& recon_map, const PoseCorpus& corpus, const Vec& jw);

}  // namespace acae
