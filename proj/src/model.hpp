#pragma once

#include "corpus.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "skeleton.hpp"

namespace acae {

// Raised when a raw weight row sums to (near) zero and cannot be normalized;
// the trainer reacts by re-initializing that row.
class DegenerateRowError : public Error {
 public:
  DegenerateRowError(std::string which, int row, double sum)
      : Error(Err::DegenerateRow, "degenerate row " + std::to_string(row) + " in " + which +
                                      " (sum " + std::to_string(sum) + ")"),
        which_(std::move(which)),
        row_(row),
        sum_(sum) {}

  const std::string& which() const { return which_; }
  int row() const { return row_; }
  double sum() const { return sum_; }

 private:
  std::string which_;
  int row_;
  double sum_;
};

// Divides each row by its sum so rows sum to 1 (the affine-combination
// constraint, enforced in-graph). Throws DegenerateRowError below threshold.
Mat normalize_rows(const Mat& raw, const std::string& which = "matrix");

inline constexpr double kDegenerateRowSum = 1e-6;

// Shared-storage blocks of a chirality-equivariant weight matrix. The
// assembled matrix is
//   [[w1 w2 w3],
//    [w2 w1 w3],
//    [w4 w4 w5]]
// over (left, right, center) row and column sections; w1/w2/w3 appear twice,
// so the parameter count is roughly halved rather than tied by a penalty.
struct ChiralBlocks {
  Mat w1;  // a x b  (left rows over left cols / right rows over right cols)
  Mat w2;  // a x b  (left rows over right cols and vice versa)
  Mat w3;  // a x c  (paired rows over center cols)
  Mat w4;  // e x b  (center rows over left and right cols)
  Mat w5;  // e x c  (center rows over center cols)

  int paired_rows() const { return static_cast<int>(w1.rows()); }
  int center_rows() const { return static_cast<int>(w4.rows()); }
  int paired_cols() const { return static_cast<int>(w1.cols()); }
  int center_cols() const { return static_cast<int>(w3.cols()); }
  int rows() const { return 2 * paired_rows() + center_rows(); }
  int cols() const { return 2 * paired_cols() + center_cols(); }
  int param_count() const;

  void validate() const;

  // Scatters a gradient w.r.t. the assembled matrix back onto the blocks:
  // each block receives the sum over the positions it occupies.
  ChiralBlocks gather_gradient(const Mat& assembled_grad) const;

  static ChiralBlocks random(int paired_rows, int center_rows, int paired_cols, int center_cols,
                             Rng& rng);
};

Mat assemble_chiral(const ChiralBlocks& blocks);

struct LatentPose {
  MatX3 latents;  // L x 3, mm

  int latent_count() const { return static_cast<int>(latents.rows()); }
};

// ACAE parameters. Raw matrices are unconstrained; the sum-to-one constraint
// is applied by row normalization every time the weights are read.
struct AcaeWeights {
  bool chiral = false;
  Mat raw_enc;  // L x J, used when !chiral
  Mat raw_dec;  // J x L, used when !chiral
  ChiralBlocks enc_blocks;
  ChiralBlocks dec_blocks;
  std::uint64_t catalog_hash = 0;

  int joint_count() const;
  int latent_count() const;

  Mat raw_encoder() const;  // assembled when chiral
  Mat raw_decoder() const;
  // Normalized matrices; chiral storage shares one row sum per mirrored row
  // pair so the block pattern survives normalization bit-exactly.
  Mat encoder() const;
  Mat decoder() const;

  // Replaces raw parameters by their normalized representation; for chiral
  // storage the shared row sums divide the blocks directly.
  void normalize_in_place();

  static AcaeWeights init_dense(int latent_count, int joint_count, Rng& rng);
  static AcaeWeights init_chiral(const LatentPartition& partition, const JointCatalog& catalog,
                                 Rng& rng);
};

LatentPose encode(const AcaeWeights& w, const Pose& pose);
Pose decode(const AcaeWeights& w, const LatentPose& q);

struct LossConfig {
  bool use_projected = false;   // Pixel-space reconstruction instead of 3D
  double lambda_sparse = 0.0;
  bool head_weighting = true;   // x10 on head joints
};

struct LossTerms {
  double reconstr = 0.0;       // mm; NaN when not evaluated
  double reconstr_proj = 0.0;  // px; NaN when not evaluated
  double sparse = 0.0;
  double total = 0.0;
};

double reconstruction_loss(const AcaeWeights& w, const PoseCorpus& corpus, const Vec& loss_weights);
double projected_reconstruction_loss(const AcaeWeights& w, const PoseCorpus& corpus,
                                     const Vec& loss_weights);
double sparsity_loss(const AcaeWeights& w);

// Parameter vector layout: encoder parameters then decoder parameters, each
// flattened in storage order (dense matrix, or blocks w1..w5 in sequence).
int param_count(const AcaeWeights& w);
Vec pack_params(const AcaeWeights& w);
void unpack_params(const Vec& params, AcaeWeights& w);

// Loss over the selected examples (all when `indices` is empty).
LossTerms eval_loss(const AcaeWeights& w, const PoseCorpus& corpus,
                    const std::vector<int>& indices, const LossConfig& cfg);

// Loss plus analytic gradient of the total w.r.t. the raw parameters,
// differentiated through the row normalization. |x| has subgradient 0 at 0.
LossTerms loss_and_gradient(const AcaeWeights& w, const PoseCorpus& corpus,
                            const std::vector<int>& indices, const LossConfig& cfg, Vec& grad_out);

}  // namespace acae
