// Exercises the shared-library surface through the public C header only.
#include <acae/acae.h>

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("c api: catalogs") {
  acae_catalog* cat = nullptr;
  REQUIRE(acae_catalog_builtin("demo2", &cat) == ACAE_OK);
  CHECK(acae_catalog_joint_count(cat) == 30);
  CHECK(acae_catalog_default_root(cat) == 24);  // first center-block joint
  char hex[17];
  REQUIRE(acae_catalog_hash_hex(cat, hex, sizeof(hex)) == ACAE_OK);
  CHECK(std::strlen(hex) == 16);

  TempFile meta("tmp_capi_meta.json");
  REQUIRE(acae_catalog_save_meta(cat, meta.path.c_str()) == ACAE_OK);
  acae_catalog* back = nullptr;
  REQUIRE(acae_catalog_from_meta(meta.path.c_str(), &back) == ACAE_OK);
  char hex2[17];
  acae_catalog_hash_hex(back, hex2, sizeof(hex2));
  CHECK(std::string(hex) == hex2);
  acae_catalog_free(back);
  acae_catalog_free(cat);

  acae_catalog* bad = nullptr;
  CHECK(acae_catalog_builtin("nope", &bad) == ACAE_ERR_INVALID_ARGUMENT);
  CHECK(std::string(acae_last_error()).find("nope") != std::string::npos);
  CHECK(acae_catalog_builtin(nullptr, &bad) == ACAE_ERR_INVALID_ARGUMENT);
}

TEST_CASE("c api: synth, corpus io, mask, filter, fit, eval") {
  acae_catalog* cat = nullptr;
  REQUIRE(acae_catalog_builtin("demo2", &cat) == ACAE_OK);

  acae_synth_params sp;
  acae_synth_params_init(&sp);
  sp.true_latent_count = 8;
  sp.example_count = 150;
  sp.noise_sigma = 3.0;
  sp.seed = 77;
  sp.tags_csv = "alpha,beta";
  acae_corpus* corpus = nullptr;
  acae_mixing* mixing = nullptr;
  REQUIRE(acae_corpus_synth(cat, &sp, &corpus, &mixing) == ACAE_OK);
  CHECK(acae_corpus_size(corpus) == 150);

  TempFile mixing_file("tmp_capi_mixing.json");
  CHECK(acae_mixing_save(mixing, mixing_file.path.c_str()) == ACAE_OK);
  acae_mixing_free(mixing);

  TempFile corpus_file("tmp_capi_corpus.jsonl");
  REQUIRE(acae_corpus_save(corpus, corpus_file.path.c_str()) == ACAE_OK);
  acae_corpus* loaded = nullptr;
  REQUIRE(acae_corpus_load(corpus_file.path.c_str(), cat, &loaded) == ACAE_OK);
  CHECK(acae_corpus_size(loaded) == 150);

  acae_corpus* masked = nullptr;
  REQUIRE(acae_corpus_mask(corpus, R"({"alpha": ["alpha"], "beta": ["beta"]})", &masked) ==
          ACAE_OK);
  acae_corpus* bad_masked = nullptr;
  CHECK(acae_corpus_mask(corpus, R"({"alpha": ["alpha"]})", &bad_masked) ==
        ACAE_ERR_UNKNOWN_TAG);
  CHECK(acae_corpus_mask(corpus, R"({"alpha": [], "beta": ["beta"]})", &bad_masked) ==
        ACAE_ERR_EMPTY_LABEL_SET);
  CHECK(acae_corpus_mask(corpus, "not json", &bad_masked) == ACAE_ERR_PARSE);

  acae_corpus* filtered = nullptr;
  REQUIRE(acae_corpus_filter_redundant(corpus, 100.0, &filtered) == ACAE_OK);
  CHECK(acae_corpus_size(filtered) >= 1);
  CHECK(acae_corpus_size(filtered) <= 150);

  acae_fit_params fp;
  acae_fit_params_init(&fp);
  fp.latent_count = 8;
  fp.steps = 300;
  fp.chirality = 0;
  fp.seed = 5;
  fp.log_every = 50;
  acae_weights* weights = nullptr;
  acae_trainlog* log = nullptr;
  REQUIRE(acae_fit(corpus, &fp, &weights, &log) == ACAE_OK);
  CHECK(acae_weights_joint_count(weights) == 30);
  CHECK(acae_weights_latent_count(weights) == 8);
  CHECK(acae_weights_is_chiral(weights) == 0);
  double val_mm = -1, val_px = -1;
  CHECK(acae_trainlog_final_val(log, &val_mm, &val_px) == ACAE_OK);
  CHECK(val_mm > 0.0);

  TempFile log_file("tmp_capi_log.csv");
  CHECK(acae_trainlog_save_csv(log, log_file.path.c_str()) == ACAE_OK);
  acae_trainlog_free(log);

  TempFile ckpt("tmp_capi_ckpt.json");
  REQUIRE(acae_weights_save(weights, ckpt.path.c_str()) == ACAE_OK);
  acae_weights* weights_back = nullptr;
  REQUIRE(acae_weights_load(ckpt.path.c_str(), &weights_back) == ACAE_OK);
  CHECK(acae_weights_latent_count(weights_back) == 8);

  // eval: a corpus against itself is a perfect report
  double mpjpe = -1, pmpjpe = -1, pck = -1, cps = -1;
  acae_report* report = nullptr;
  REQUIRE(acae_eval_files(corpus_file.path.c_str(), corpus_file.path.c_str(), cat,
                          acae_catalog_default_root(cat), &report) == ACAE_OK);
  CHECK(acae_report_summary(report, &mpjpe, &pmpjpe, &pck, &cps) == ACAE_OK);
  CHECK(mpjpe == 0.0);
  CHECK(pck == 100.0);
  CHECK(cps == 100.0);
  TempFile report_json("tmp_capi_report.json");
  TempFile report_csv("tmp_capi_report.csv");
  CHECK(acae_report_save_json(report, report_json.path.c_str()) == ACAE_OK);
  CHECK(acae_report_save_csv(report, report_csv.path.c_str()) == ACAE_OK);
  acae_report_free(report);

  acae_weights_free(weights_back);
  acae_weights_free(weights);
  acae_corpus_free(filtered);
  acae_corpus_free(masked);
  acae_corpus_free(loaded);
  acae_corpus_free(corpus);
  acae_catalog_free(cat);
}

TEST_CASE("c api: consistency demo and elbow on a tiny instance") {
  acae_catalog* cat = nullptr;
  REQUIRE(acae_catalog_builtin("demo2", &cat) == ACAE_OK);
  acae_synth_params sp;
  acae_synth_params_init(&sp);
  sp.true_latent_count = 6;
  sp.example_count = 200;
  sp.noise_sigma = 2.0;
  sp.seed = 99;
  sp.tags_csv = "alpha,beta";
  acae_corpus* corpus = nullptr;
  REQUIRE(acae_corpus_synth(cat, &sp, &corpus, nullptr) == ACAE_OK);

  acae_fit_params fp;
  acae_fit_params_init(&fp);
  fp.latent_count = 6;
  fp.steps = 400;
  fp.chirality = 0;
  fp.head_weighting = 0;
  fp.log_every = 100;
  fp.val_fraction = 0.0;
  acae_weights* weights = nullptr;
  REQUIRE(acae_fit(corpus, &fp, &weights, nullptr) == ACAE_OK);

  int32_t ls[2] = {2, 6};
  double errors[2] = {-1, -1};
  fp.use_projected_loss = 1;
  REQUIRE(acae_elbow(corpus, &fp, ls, 2, errors) == ACAE_OK);
  CHECK(errors[0] > errors[1]);

  acae_demo_params dp;
  acae_demo_params_init(&dp);
  dp.base_steps = 400;
  dp.branch_steps = 200;
  acae_variant_metrics rows[4];
  int32_t count = 0;
  REQUIRE(acae_consistency_demo(corpus, R"({"alpha": ["alpha"], "beta": ["beta"]})", weights,
                                &dp, nullptr, rows, 4, &count) == ACAE_OK);
  CHECK(count == 4);
  CHECK(std::string(rows[0].variant) == "separate");
  CHECK(rows[2].inconsistency_mm <= 1e-9);

  int32_t one = 0;
  acae_variant_metrics row;
  REQUIRE(acae_consistency_demo(corpus, R"({"alpha": ["alpha"], "beta": ["beta"]})", weights,
                                &dp, "regularized", &row, 1, &one) == ACAE_OK);
  CHECK(one == 1);
  CHECK(std::string(row.variant) == "regularized");

  acae_weights_free(weights);
  acae_corpus_free(corpus);
  acae_catalog_free(cat);
}

TEST_CASE("c api: status names and version") {
  CHECK(std::string(acae_version()) == "1.0.0");
  CHECK(std::string(acae_status_name(ACAE_OK)) == "ok");
  CHECK(std::string(acae_status_name(ACAE_ERR_DEPTH_TOO_SMALL)) == "depth_too_small");
}
