#include "acae/acae.h"

#include "corpus.hpp"
#include "lifter.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "serialize.hpp"
#include "skeleton.hpp"
#include "train.hpp"

#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

struct acae_catalog {
  acae::JointCatalog v;
};
struct acae_corpus {
  acae::PoseCorpus v;
};
struct acae_mixing {
  acae::GroundTruthMixing v;
};
struct acae_weights {
  acae::AcaeWeights v;
};
struct acae_trainlog {
  acae::TrainLog v;
};
struct acae_report {
  acae::MetricReport v;
};

namespace {

thread_local std::string g_last_error;

acae_status status_from(acae::Err code) {
  using acae::Err;
  switch (code) {
    case Err::Ok:
      return ACAE_OK;
    case Err::InvalidArgument:
      return ACAE_ERR_INVALID_ARGUMENT;
    case Err::ConfigInvalid:
      return ACAE_ERR_CONFIG_INVALID;
    case Err::Io:
      return ACAE_ERR_IO;
    case Err::Parse:
      return ACAE_ERR_PARSE;
    case Err::DepthTooSmall:
      return ACAE_ERR_DEPTH_TOO_SMALL;
    case Err::PartitionMismatch:
      return ACAE_ERR_PARTITION_MISMATCH;
    case Err::AsymmetricFormat:
      return ACAE_ERR_ASYMMETRIC_FORMAT;
    case Err::TooFewLatents:
      return ACAE_ERR_TOO_FEW_LATENTS;
    case Err::DegenerateRow:
      return ACAE_ERR_DEGENERATE_ROW;
    case Err::IncompleteInput:
      return ACAE_ERR_INCOMPLETE_INPUT;
    case Err::EmptyCorpus:
      return ACAE_ERR_EMPTY_CORPUS;
    case Err::ShapeMismatch:
      return ACAE_ERR_SHAPE_MISMATCH;
    case Err::UnknownTag:
      return ACAE_ERR_UNKNOWN_TAG;
    case Err::EmptyLabelSet:
      return ACAE_ERR_EMPTY_LABEL_SET;
    case Err::SingularSystem:
      return ACAE_ERR_SINGULAR_SYSTEM;
    case Err::NoValidJoints:
      return ACAE_ERR_NO_VALID_JOINTS;
    case Err::DegenerateConfiguration:
      return ACAE_ERR_DEGENERATE_CONFIGURATION;
    case Err::InvalidRoot:
      return ACAE_ERR_INVALID_ROOT;
  }
  return ACAE_ERR_INTERNAL;
}

template <typename Fn>
acae_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ACAE_OK;
  } catch (const acae::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ACAE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ACAE_ERR_INTERNAL;
  }
}

acae_status invalid(const char* msg) {
  g_last_error = msg;
  return ACAE_ERR_INVALID_ARGUMENT;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

acae::MaskPolicy parse_policy(const char* policy_json) {
  acae::require(policy_json != nullptr, acae::Err::InvalidArgument, "policy JSON is null");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(policy_json);
  } catch (const std::exception& e) {
    acae::fail(acae::Err::Parse, std::string("invalid policy JSON: ") + e.what());
  }
  acae::require(doc.is_object(), acae::Err::Parse, "policy JSON must be an object");
  acae::MaskPolicy policy;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    std::vector<std::string> formats;
    for (const auto& f : it.value()) formats.push_back(f.get<std::string>());
    policy[it.key()] = std::move(formats);
  }
  return policy;
}

acae::TrainConfig to_train_config(const acae_fit_params& p) {
  acae::TrainConfig cfg;
  cfg.latent_count = p.latent_count;
  cfg.learning_rate = p.learning_rate;
  cfg.lr_final = p.lr_final;
  cfg.steps = p.steps;
  cfg.batch_size = p.batch_size;
  cfg.lambda_sparse = p.lambda_sparse;
  cfg.use_projected_loss = p.use_projected_loss != 0;
  cfg.chirality = p.chirality != 0;
  cfg.head_weighting = p.head_weighting != 0;
  cfg.seed = p.seed;
  cfg.val_fraction = p.val_fraction;
  cfg.log_every = p.log_every;
  return cfg;
}

}  // namespace

extern "C" {

const char* acae_version(void) { return "1.0.0"; }

const char* acae_status_name(acae_status status) {
  switch (status) {
    case ACAE_OK:
      return "ok";
    case ACAE_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case ACAE_ERR_CONFIG_INVALID:
      return "config_invalid";
    case ACAE_ERR_IO:
      return "io";
    case ACAE_ERR_PARSE:
      return "parse";
    case ACAE_ERR_DEPTH_TOO_SMALL:
      return "depth_too_small";
    case ACAE_ERR_PARTITION_MISMATCH:
      return "partition_mismatch";
    case ACAE_ERR_ASYMMETRIC_FORMAT:
      return "asymmetric_format";
    case ACAE_ERR_TOO_FEW_LATENTS:
      return "too_few_latents";
    case ACAE_ERR_DEGENERATE_ROW:
      return "degenerate_row";
    case ACAE_ERR_INCOMPLETE_INPUT:
      return "incomplete_input";
    case ACAE_ERR_EMPTY_CORPUS:
      return "empty_corpus";
    case ACAE_ERR_SHAPE_MISMATCH:
      return "shape_mismatch";
    case ACAE_ERR_UNKNOWN_TAG:
      return "unknown_tag";
    case ACAE_ERR_EMPTY_LABEL_SET:
      return "empty_label_set";
    case ACAE_ERR_SINGULAR_SYSTEM:
      return "singular_system";
    case ACAE_ERR_NO_VALID_JOINTS:
      return "no_valid_joints";
    case ACAE_ERR_DEGENERATE_CONFIGURATION:
      return "degenerate_configuration";
    case ACAE_ERR_INVALID_ROOT:
      return "invalid_root";
    case ACAE_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* acae_last_error(void) { return g_last_error.c_str(); }

/* ---- catalogs ---- */

acae_status acae_catalog_builtin(const char* set_name, acae_catalog** out) {
  if (!set_name || !out) return invalid("null argument");
  return guarded([&] {
    auto cat = acae::build_catalog(acae::builtin_formats(set_name));
    *out = new acae_catalog{std::move(cat)};
  });
}

acae_status acae_catalog_from_files(const char* const* paths, int32_t count, acae_catalog** out) {
  if (!paths || count < 1 || !out) return invalid("null argument");
  return guarded([&] {
    std::vector<acae::SkeletonFormat> formats;
    for (int32_t i = 0; i < count; ++i) {
      acae::require(paths[i] != nullptr, acae::Err::InvalidArgument, "null path");
      formats.push_back(acae::SkeletonFormat::load_file(paths[i]));
    }
    *out = new acae_catalog{acae::build_catalog(formats)};
  });
}

acae_status acae_catalog_save_meta(const acae_catalog* catalog, const char* path) {
  if (!catalog || !path) return invalid("null argument");
  return guarded([&] { acae::save_catalog_meta(catalog->v, path); });
}

acae_status acae_catalog_from_meta(const char* path, acae_catalog** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = new acae_catalog{acae::load_catalog_meta(path)}; });
}

int32_t acae_catalog_joint_count(const acae_catalog* catalog) {
  return catalog ? catalog->v.joint_count() : -1;
}

int32_t acae_catalog_default_root(const acae_catalog* catalog) {
  return catalog ? catalog->v.default_root() : -1;
}

acae_status acae_catalog_hash_hex(const acae_catalog* catalog, char* buf, size_t buflen) {
  if (!catalog || !buf || buflen < 17) return invalid("buffer too small");
  std::string hex = acae::hex64(catalog->v.hash());
  std::memcpy(buf, hex.c_str(), hex.size() + 1);
  return ACAE_OK;
}

void acae_catalog_free(acae_catalog* catalog) { delete catalog; }

/* ---- corpora ---- */

void acae_synth_params_init(acae_synth_params* params) {
  if (!params) return;
  acae::SynthConfig d;
  params->true_latent_count = d.true_latent_count;
  params->example_count = d.example_count;
  params->noise_sigma = d.noise_sigma;
  params->seed = d.seed;
  params->camera_distance_min = d.camera_distance_min;
  params->camera_distance_max = d.camera_distance_max;
  params->template_spread = d.template_spread;
  params->jitter_sigma = d.jitter_sigma;
  params->focal_px = d.focal_px;
  params->principal_px = d.principal_px;
  params->tags_csv = nullptr;
}

acae_status acae_corpus_synth(const acae_catalog* catalog, const acae_synth_params* params,
                              acae_corpus** out, acae_mixing** mixing_out) {
  if (!catalog || !params || !out) return invalid("null argument");
  return guarded([&] {
    acae::SynthConfig cfg;
    cfg.formats = catalog->v.formats;
    cfg.true_latent_count = params->true_latent_count;
    cfg.example_count = params->example_count;
    cfg.noise_sigma = params->noise_sigma;
    cfg.seed = params->seed;
    cfg.camera_distance_min = params->camera_distance_min;
    cfg.camera_distance_max = params->camera_distance_max;
    cfg.template_spread = params->template_spread;
    cfg.jitter_sigma = params->jitter_sigma;
    cfg.focal_px = params->focal_px;
    cfg.principal_px = params->principal_px;
    if (params->tags_csv && params->tags_csv[0] != '\0') cfg.tags = split_csv(params->tags_csv);
    auto [corpus, mixing] = acae::synth_corpus(cfg);
    *out = new acae_corpus{std::move(corpus)};
    if (mixing_out) *mixing_out = new acae_mixing{std::move(mixing)};
  });
}

acae_status acae_corpus_load(const char* path, const acae_catalog* catalog, acae_corpus** out) {
  if (!path || !catalog || !out) return invalid("null argument");
  return guarded([&] { *out = new acae_corpus{acae::load_corpus(path, catalog->v)}; });
}

acae_status acae_corpus_save(const acae_corpus* corpus, const char* path) {
  if (!corpus || !path) return invalid("null argument");
  return guarded([&] {
    std::string p(path);
    if (p.size() >= 4 && p.compare(p.size() - 4, 4, ".bin") == 0)
      acae::save_corpus_bin(corpus->v, p);
    else
      acae::save_corpus_jsonl(corpus->v, p);
  });
}

int64_t acae_corpus_size(const acae_corpus* corpus) { return corpus ? corpus->v.size() : -1; }

acae_status acae_corpus_mask(const acae_corpus* corpus, const char* policy_json,
                             acae_corpus** out) {
  if (!corpus || !out) return invalid("null argument");
  return guarded([&] {
    *out = new acae_corpus{acae::mask_subsets(corpus->v, parse_policy(policy_json))};
  });
}

acae_status acae_corpus_filter_redundant(const acae_corpus* corpus, double threshold_mm,
                                         acae_corpus** out) {
  if (!corpus || !out) return invalid("null argument");
  return guarded([&] {
    *out = new acae_corpus{acae::redundancy_filter_corpus(corpus->v, threshold_mm)};
  });
}

void acae_corpus_free(acae_corpus* corpus) { delete corpus; }

acae_status acae_mixing_save(const acae_mixing* mixing, const char* path) {
  if (!mixing || !path) return invalid("null argument");
  return guarded([&] { acae::save_mixing_json(mixing->v, path); });
}

void acae_mixing_free(acae_mixing* mixing) { delete mixing; }

/* ---- fitting ---- */

void acae_fit_params_init(acae_fit_params* params) {
  if (!params) return;
  acae::TrainConfig d;
  params->latent_count = d.latent_count;
  params->learning_rate = d.learning_rate;
  params->lr_final = d.lr_final;
  params->steps = d.steps;
  params->batch_size = d.batch_size;
  params->lambda_sparse = d.lambda_sparse;
  params->use_projected_loss = d.use_projected_loss ? 1 : 0;
  params->chirality = d.chirality ? 1 : 0;
  params->head_weighting = d.head_weighting ? 1 : 0;
  params->seed = d.seed;
  params->val_fraction = d.val_fraction;
  params->log_every = d.log_every;
}

acae_status acae_fit(const acae_corpus* corpus, const acae_fit_params* params, acae_weights** out,
                     acae_trainlog** log_out) {
  if (!corpus || !params || !out) return invalid("null argument");
  return guarded([&] {
    auto [weights, log] = acae::fit_acae(corpus->v, to_train_config(*params));
    *out = new acae_weights{std::move(weights)};
    if (log_out) *log_out = new acae_trainlog{std::move(log)};
  });
}

acae_status acae_trainlog_save_csv(const acae_trainlog* log, const char* path) {
  if (!log || !path) return invalid("null argument");
  return guarded([&] { log->v.save_csv(path); });
}

acae_status acae_trainlog_final_val(const acae_trainlog* log, double* reconstr_mm,
                                    double* reconstr_px) {
  if (!log) return invalid("null argument");
  if (reconstr_mm) *reconstr_mm = log->v.final_val_reconstr_mm;
  if (reconstr_px) *reconstr_px = log->v.final_val_reconstr_px;
  return ACAE_OK;
}

void acae_trainlog_free(acae_trainlog* log) { delete log; }

acae_status acae_weights_save(const acae_weights* weights, const char* path) {
  if (!weights || !path) return invalid("null argument");
  return guarded([&] { acae::save_weights_json(weights->v, path); });
}

acae_status acae_weights_load(const char* path, acae_weights** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = new acae_weights{acae::load_weights_json(path)}; });
}

int32_t acae_weights_joint_count(const acae_weights* weights) {
  return weights ? weights->v.joint_count() : -1;
}

int32_t acae_weights_latent_count(const acae_weights* weights) {
  return weights ? weights->v.latent_count() : -1;
}

int32_t acae_weights_is_chiral(const acae_weights* weights) {
  return weights ? (weights->v.chiral ? 1 : 0) : -1;
}

void acae_weights_free(acae_weights* weights) { delete weights; }

acae_status acae_elbow(const acae_corpus* corpus, const acae_fit_params* params,
                       const int32_t* l_values, int32_t count, double* errors_out) {
  if (!corpus || !params || !l_values || count < 1 || !errors_out)
    return invalid("null argument");
  return guarded([&] {
    std::vector<int> ls(l_values, l_values + count);
    auto points = acae::elbow_curve(corpus->v, ls, to_train_config(*params));
    for (int32_t i = 0; i < count; ++i)
      errors_out[i] = points[static_cast<std::size_t>(i)].val_projected_err_mm;
  });
}

/* ---- consistency demo ---- */

void acae_demo_params_init(acae_demo_params* params) {
  if (!params) return;
  acae::ConsistencyDemoConfig d;
  params->lambda_cons = d.lambda_cons;
  params->lambda_teach = d.lambda_teach;
  params->lambda_proj = d.pose_weights.lambda_proj;
  params->lambda_abs = d.pose_weights.lambda_abs;
  params->abs_depth_cap = d.pose_weights.abs_depth_cap;
  params->reference_format = d.reference_format;
  params->learning_rate = d.learning_rate;
  params->lr_final = d.lr_final;
  params->base_steps = d.base_steps;
  params->branch_steps = d.branch_steps;
  params->batch_size = d.batch_size;
  params->seed = d.seed;
  params->heldout_fraction = d.heldout_fraction;
}

acae_status acae_consistency_demo(const acae_corpus* complete, const char* policy_json,
                                  const acae_weights* frozen, const acae_demo_params* params,
                                  const char* variants_csv, acae_variant_metrics* out,
                                  int32_t capacity, int32_t* count_out) {
  if (!complete || !frozen || !params || !out || !count_out) return invalid("null argument");
  return guarded([&] {
    acae::ConsistencyDemoConfig cfg;
    cfg.lambda_cons = params->lambda_cons;
    cfg.lambda_teach = params->lambda_teach;
    cfg.pose_weights.lambda_proj = params->lambda_proj;
    cfg.pose_weights.lambda_abs = params->lambda_abs;
    cfg.pose_weights.abs_depth_cap = params->abs_depth_cap;
    cfg.reference_format = params->reference_format;
    cfg.learning_rate = params->learning_rate;
    cfg.lr_final = params->lr_final;
    cfg.base_steps = params->base_steps;
    cfg.branch_steps = params->branch_steps;
    cfg.batch_size = params->batch_size;
    cfg.seed = params->seed;
    cfg.heldout_fraction = params->heldout_fraction;
    if (variants_csv && variants_csv[0] != '\0') {
      cfg.variants.clear();
      for (const auto& name : split_csv(variants_csv))
        cfg.variants.push_back(acae::variant_from_name(name));
    }
    acae::require(static_cast<int32_t>(cfg.variants.size()) <= capacity,
                  acae::Err::InvalidArgument, "output capacity too small");
    auto results = acae::consistency_demo(complete->v, parse_policy(policy_json), frozen->v, cfg);
    for (std::size_t i = 0; i < results.size(); ++i) {
      acae_variant_metrics& m = out[i];
      std::memset(m.variant, 0, sizeof(m.variant));
      std::strncpy(m.variant, results[i].variant.c_str(), sizeof(m.variant) - 1);
      m.lambda_cons = results[i].lambda_cons;
      m.lambda_teach = results[i].lambda_teach;
      m.mpjpe = results[i].report.mpjpe;
      m.pmpjpe = results[i].report.pmpjpe;
      m.pck100 = results[i].report.pck100;
      m.cps200 = results[i].report.cps200;
      m.inconsistency_mm = results[i].inconsistency_mm;
    }
    *count_out = static_cast<int32_t>(results.size());
  });
}

/* ---- evaluation ---- */

acae_status acae_eval_files(const char* pred_path, const char* gt_path,
                            const acae_catalog* catalog, int32_t root_index, acae_report** out) {
  if (!pred_path || !gt_path || !catalog || !out) return invalid("null argument");
  return guarded([&] {
    acae::PoseCorpus pred = acae::load_corpus(pred_path, catalog->v);
    acae::PoseCorpus gt = acae::load_corpus(gt_path, catalog->v);
    acae::require(pred.size() == gt.size(), acae::Err::ShapeMismatch,
                  "prediction and ground truth corpora differ in size");
    std::vector<acae::Pose> p, g;
    for (const auto& ex : pred.examples) p.push_back(ex.pose);
    for (const auto& ex : gt.examples) g.push_back(ex.pose);
    *out = new acae_report{acae::evaluate_poses(p, g, root_index)};
  });
}

acae_status acae_report_summary(const acae_report* report, double* mpjpe, double* pmpjpe,
                                double* pck100, double* cps200) {
  if (!report) return invalid("null argument");
  if (mpjpe) *mpjpe = report->v.mpjpe;
  if (pmpjpe) *pmpjpe = report->v.pmpjpe;
  if (pck100) *pck100 = report->v.pck100;
  if (cps200) *cps200 = report->v.cps200;
  return ACAE_OK;
}

acae_status acae_report_save_json(const acae_report* report, const char* path) {
  if (!report || !path) return invalid("null argument");
  return guarded([&] { acae::save_report_json(report->v, path); });
}

acae_status acae_report_save_csv(const acae_report* report, const char* path) {
  if (!report || !path) return invalid("null argument");
  return guarded([&] { acae::save_report_csv(report->v, path); });
}

void acae_report_free(acae_report* report) { delete report; }

}  // extern "C"
