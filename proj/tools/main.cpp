// acae command-line tool. Talks to the library exclusively through the C API
// in acae/acae.h; every run writes a manifest that `acae replay` can re-execute
// to reproduce the outputs byte for byte.

#include <acae/acae.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct ToolError : std::runtime_error {
  explicit ToolError(const std::string& msg) : std::runtime_error(msg) {}
};

void check(acae_status st, const std::string& ctx) {
  if (st != ACAE_OK)
    throw ToolError(ctx + ": " + acae_status_name(st) + " (" + acae_last_error() + ")");
}

// Unique-pointer wrappers over the opaque C handles.
using CatalogPtr = std::unique_ptr<acae_catalog, decltype(&acae_catalog_free)>;
using CorpusPtr = std::unique_ptr<acae_corpus, decltype(&acae_corpus_free)>;
using MixingPtr = std::unique_ptr<acae_mixing, decltype(&acae_mixing_free)>;
using WeightsPtr = std::unique_ptr<acae_weights, decltype(&acae_weights_free)>;
using TrainlogPtr = std::unique_ptr<acae_trainlog, decltype(&acae_trainlog_free)>;
using ReportPtr = std::unique_ptr<acae_report, decltype(&acae_report_free)>;

std::uint64_t fnv64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ToolError("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out.good()) throw ToolError("cannot write " + tmp);
    out << content;
    if (!out.good()) throw ToolError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ToolError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ToolError("invalid JSON in " + path + ": " + e.what());
  }
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ToolError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

bool flag_on(const std::string& v, const std::string& flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ToolError(flag + " must be 'on' or 'off'");
}

// Formats come from a builtin set name, a list of per-format JSON files, or a
// corpus meta sidecar.
CatalogPtr resolve_catalog(const json& formats_cfg) {
  acae_catalog* cat = nullptr;
  if (formats_cfg.contains("builtin")) {
    check(acae_catalog_builtin(formats_cfg["builtin"].get<std::string>().c_str(), &cat),
          "catalog");
  } else if (formats_cfg.contains("files")) {
    std::vector<std::string> files = formats_cfg["files"].get<std::vector<std::string>>();
    std::vector<const char*> ptrs;
    for (const auto& f : files) ptrs.push_back(f.c_str());
    check(acae_catalog_from_files(ptrs.data(), static_cast<int32_t>(ptrs.size()), &cat),
          "catalog");
  } else if (formats_cfg.contains("meta")) {
    check(acae_catalog_from_meta(formats_cfg["meta"].get<std::string>().c_str(), &cat),
          "catalog");
  } else {
    throw ToolError("no skeleton formats specified");
  }
  return CatalogPtr(cat, &acae_catalog_free);
}

json formats_cfg_from_flag(const std::string& formats_flag, const std::string& corpus_path) {
  json cfg;
  if (!formats_flag.empty()) {
    auto items = split_csv(formats_flag);
    if (items.size() == 1 && !fs::exists(items[0]))
      cfg["builtin"] = items[0];
    else
      cfg["files"] = items;
    return cfg;
  }
  if (!corpus_path.empty()) {
    std::string meta = corpus_path + ".meta.json";
    if (fs::exists(meta)) {
      cfg["meta"] = meta;
      return cfg;
    }
  }
  throw ToolError("no --formats given and no meta sidecar found next to the corpus");
}

std::string remap(const std::string& path, const std::string& out_dir) {
  if (out_dir.empty()) return path;
  return (fs::path(out_dir) / fs::path(path).filename()).string();
}

using Outputs = std::vector<std::pair<std::string, std::string>>;  // label -> path

/* ---- command implementations; each takes its manifest config ---- */

Outputs run_synth(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog = resolve_catalog(cfg.at("formats"));
  acae_synth_params p;
  acae_synth_params_init(&p);
  p.true_latent_count = cfg.at("latents").get<int32_t>();
  p.example_count = cfg.at("k").get<int32_t>();
  p.noise_sigma = cfg.at("sigma").get<double>();
  p.seed = cfg.at("seed").get<std::uint64_t>();
  p.camera_distance_min = cfg.at("dist_min").get<double>();
  p.camera_distance_max = cfg.at("dist_max").get<double>();
  std::string tags = cfg.at("tags").get<std::string>();
  if (!tags.empty()) p.tags_csv = tags.c_str();

  acae_corpus* corpus = nullptr;
  acae_mixing* mixing = nullptr;
  check(acae_corpus_synth(catalog.get(), &p, &corpus, &mixing), "synth");
  CorpusPtr corpus_p(corpus, &acae_corpus_free);
  MixingPtr mixing_p(mixing, &acae_mixing_free);

  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  check(acae_corpus_save(corpus_p.get(), out.c_str()), "save corpus");
  check(acae_catalog_save_meta(catalog.get(), (out + ".meta.json").c_str()), "save meta");
  check(acae_mixing_save(mixing_p.get(), (out + ".mixing.json").c_str()), "save mixing");
  return {{"corpus", out}, {"meta", out + ".meta.json"}, {"mixing", out + ".mixing.json"}};
}

acae_fit_params fit_params_from_cfg(const json& cfg) {
  acae_fit_params p;
  acae_fit_params_init(&p);
  p.latent_count = cfg.at("latents").get<int32_t>();
  p.learning_rate = cfg.at("lr").get<double>();
  p.lr_final = cfg.at("lr_final").get<double>();
  p.steps = cfg.at("steps").get<int32_t>();
  p.batch_size = cfg.at("batch_size").get<int32_t>();
  p.lambda_sparse = cfg.at("lambda_sparse").get<double>();
  p.use_projected_loss = cfg.at("projected_loss").get<bool>() ? 1 : 0;
  p.chirality = cfg.at("chirality").get<bool>() ? 1 : 0;
  p.head_weighting = cfg.at("head_weighting").get<bool>() ? 1 : 0;
  p.seed = cfg.at("seed").get<std::uint64_t>();
  p.val_fraction = cfg.at("val_fraction").get<double>();
  p.log_every = cfg.at("log_every").get<int32_t>();
  return p;
}

CorpusPtr load_corpus_cfg(const json& cfg, CatalogPtr& catalog_out) {
  catalog_out = resolve_catalog(cfg.at("formats"));
  acae_corpus* corpus = nullptr;
  check(acae_corpus_load(cfg.at("corpus").get<std::string>().c_str(), catalog_out.get(), &corpus),
        "load corpus");
  return CorpusPtr(corpus, &acae_corpus_free);
}

Outputs run_fit(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog(nullptr, &acae_catalog_free);
  CorpusPtr corpus = load_corpus_cfg(cfg, catalog);
  acae_fit_params p = fit_params_from_cfg(cfg);

  acae_weights* weights = nullptr;
  acae_trainlog* log = nullptr;
  check(acae_fit(corpus.get(), &p, &weights, &log), "fit");
  WeightsPtr weights_p(weights, &acae_weights_free);
  TrainlogPtr log_p(log, &acae_trainlog_free);

  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  check(acae_weights_save(weights_p.get(), out.c_str()), "save checkpoint");
  check(acae_trainlog_save_csv(log_p.get(), (out + ".train_log.csv").c_str()), "save log");
  double val_mm = 0, val_px = 0;
  acae_trainlog_final_val(log_p.get(), &val_mm, &val_px);
  std::fprintf(stderr, "final validation: %.6g mm (3d), %.6g px (projected)\n", val_mm, val_px);
  return {{"checkpoint", out}, {"train_log", out + ".train_log.csv"}};
}

Outputs run_elbow(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog(nullptr, &acae_catalog_free);
  CorpusPtr corpus = load_corpus_cfg(cfg, catalog);
  acae_fit_params p = fit_params_from_cfg(cfg);

  std::vector<int32_t> ls;
  for (const auto& v : cfg.at("l_values")) ls.push_back(v.get<int32_t>());
  if (ls.empty()) throw ToolError("--l-values must not be empty");
  std::vector<double> errors(ls.size());
  check(acae_elbow(corpus.get(), &p, ls.data(), static_cast<int32_t>(ls.size()), errors.data()),
        "elbow");

  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  std::string csv = "L,proj_err_mm\n";
  char buf[64];
  for (std::size_t i = 0; i < ls.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", ls[i], errors[i]);
    csv += buf;
  }
  atomic_write(out, csv);
  return {{"elbow", out}};
}

Outputs run_demo(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog(nullptr, &acae_catalog_free);
  CorpusPtr corpus = load_corpus_cfg(cfg, catalog);

  acae_weights* weights = nullptr;
  check(acae_weights_load(cfg.at("checkpoint").get<std::string>().c_str(), &weights),
        "load checkpoint");
  WeightsPtr weights_p(weights, &acae_weights_free);

  std::string policy;
  if (cfg.contains("policy") && !cfg.at("policy").get<std::string>().empty())
    policy = read_text_file(cfg.at("policy").get<std::string>());
  else
    policy = cfg.at("policy_inline").get<std::string>();

  acae_demo_params p;
  acae_demo_params_init(&p);
  p.lambda_cons = cfg.at("lambda_cons").get<double>();
  p.lambda_teach = cfg.at("lambda_teach").get<double>();
  p.reference_format = cfg.at("reference_format").get<int32_t>();
  p.learning_rate = cfg.at("lr").get<double>();
  p.lr_final = cfg.at("lr_final").get<double>();
  p.base_steps = cfg.at("base_steps").get<int32_t>();
  p.branch_steps = cfg.at("branch_steps").get<int32_t>();
  p.batch_size = cfg.at("batch_size").get<int32_t>();
  p.seed = cfg.at("seed").get<std::uint64_t>();
  p.heldout_fraction = cfg.at("heldout_fraction").get<double>();

  std::string variants = cfg.at("variants").get<std::string>();
  acae_variant_metrics rows[8];
  int32_t count = 0;
  check(acae_consistency_demo(corpus.get(), policy.c_str(), weights_p.get(), &p,
                              variants.empty() ? nullptr : variants.c_str(), rows, 8, &count),
        "consistency demo");

  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  std::string csv = "variant,lambda_cons,lambda_teach,mpjpe,pmpjpe,pck100,cps200,inconsistency_mm\n";
  char buf[320];
  for (int32_t i = 0; i < count; ++i) {
    csv += rows[i].variant;
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  rows[i].lambda_cons, rows[i].lambda_teach, rows[i].mpjpe, rows[i].pmpjpe,
                  rows[i].pck100, rows[i].cps200, rows[i].inconsistency_mm);
    csv += buf;
  }
  atomic_write(out, csv);
  return {{"metrics", out}};
}

Outputs run_eval(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog = resolve_catalog(cfg.at("formats"));
  acae_report* report = nullptr;
  check(acae_eval_files(cfg.at("pred").get<std::string>().c_str(),
                        cfg.at("gt").get<std::string>().c_str(), catalog.get(),
                        cfg.at("root").get<int32_t>(), &report),
        "eval");
  ReportPtr report_p(report, &acae_report_free);
  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  check(acae_report_save_json(report_p.get(), out.c_str()), "save report");
  check(acae_report_save_csv(report_p.get(), (out + ".csv").c_str()), "save report csv");
  return {{"report", out}, {"report_csv", out + ".csv"}};
}

Outputs run_mask(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog(nullptr, &acae_catalog_free);
  CorpusPtr corpus = load_corpus_cfg(cfg, catalog);
  std::string policy = read_text_file(cfg.at("policy").get<std::string>());
  acae_corpus* masked = nullptr;
  check(acae_corpus_mask(corpus.get(), policy.c_str(), &masked), "mask");
  CorpusPtr masked_p(masked, &acae_corpus_free);
  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  check(acae_corpus_save(masked_p.get(), out.c_str()), "save corpus");
  check(acae_catalog_save_meta(catalog.get(), (out + ".meta.json").c_str()), "save meta");
  return {{"corpus", out}, {"meta", out + ".meta.json"}};
}

Outputs run_filter(const json& cfg, const std::string& out_dir) {
  CatalogPtr catalog(nullptr, &acae_catalog_free);
  CorpusPtr corpus = load_corpus_cfg(cfg, catalog);
  acae_corpus* filtered = nullptr;
  check(acae_corpus_filter_redundant(corpus.get(), cfg.at("threshold_mm").get<double>(),
                                     &filtered),
        "filter");
  CorpusPtr filtered_p(filtered, &acae_corpus_free);
  std::string out = remap(cfg.at("out").get<std::string>(), out_dir);
  check(acae_corpus_save(filtered_p.get(), out.c_str()), "save corpus");
  check(acae_catalog_save_meta(catalog.get(), (out + ".meta.json").c_str()), "save meta");
  return {{"corpus", out}, {"meta", out + ".meta.json"}};
}

Outputs dispatch(const std::string& command, const json& cfg, const std::string& out_dir) {
  if (command == "synth") return run_synth(cfg, out_dir);
  if (command == "fit") return run_fit(cfg, out_dir);
  if (command == "elbow") return run_elbow(cfg, out_dir);
  if (command == "consistency-demo") return run_demo(cfg, out_dir);
  if (command == "eval") return run_eval(cfg, out_dir);
  if (command == "mask") return run_mask(cfg, out_dir);
  if (command == "filter") return run_filter(cfg, out_dir);
  throw ToolError("unknown command in manifest: " + command);
}

int execute(const std::string& command, const json& cfg, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  Outputs outputs = dispatch(command, cfg, out_dir);
  auto t1 = std::chrono::steady_clock::now();

  json manifest;
  manifest["schema"] = "acae-manifest-v1";
  manifest["command"] = command;
  manifest["seed"] = cfg.contains("seed") ? cfg.at("seed") : json(0);
  manifest["config"] = cfg;
  json arts = json::object();
  std::string primary;
  for (const auto& [label, path] : outputs) {
    if (primary.empty()) primary = path;
    if (!fs::exists(path) || fs::file_size(path) == 0)
      throw ToolError("output missing or empty: " + path);
    json entry;
    entry["path"] = path;
    entry["fnv64"] = hex64(fnv64_file(path));
    arts[label] = entry;
  }
  manifest["artifacts"] = arts;
  manifest["duration_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  atomic_write(primary + ".manifest.json", manifest.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affine-combining autoencoder toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic pseudo-GT corpus");
  std::string sy_formats = "demo2", sy_out, sy_tags;
  int sy_latents = 16, sy_k = 0;
  double sy_sigma = 5.0, sy_dmin = 2800.0, sy_dmax = 5200.0;
  std::uint64_t sy_seed = 1;
  synth->add_option("--formats", sy_formats, "builtin set name or comma-separated format files");
  synth->add_option("--latents", sy_latents, "planted latent count")->required();
  synth->add_option("--k", sy_k, "number of examples")->required();
  synth->add_option("--sigma", sy_sigma, "noise stddev (mm)");
  synth->add_option("--seed", sy_seed, "random seed");
  synth->add_option("--dist-min", sy_dmin, "min camera distance (mm)");
  synth->add_option("--dist-max", sy_dmax, "max camera distance (mm)");
  synth->add_option("--tags", sy_tags, "comma-separated source tags");
  synth->add_option("--out", sy_out, "corpus output path (.jsonl or .bin)")->required();

  // common fit flags
  auto add_fit_flags = [](CLI::App* cmd, int& latents, double& lr, double& lr_final, int& steps,
                          int& batch, double& lsparse, std::string& chir, std::string& proj,
                          std::string& headw, std::uint64_t& seed, double& valf, int& log_every) {
    cmd->add_option("--latents", latents, "latent keypoint count");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--lr-final", lr_final, "decayed final learning rate (0 = flat)");
    cmd->add_option("--steps", steps, "training steps");
    cmd->add_option("--batch-size", batch, "batch size");
    cmd->add_option("--lambda-sparse", lsparse, "sparsity weight");
    cmd->add_option("--chirality", chir, "on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--projected-loss", proj, "on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--head-weighting", headw, "on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--val-fraction", valf, "validation fraction");
    cmd->add_option("--log-every", log_every, "log period in steps");
  };

  auto* fit = app.add_subcommand("fit", "train an autoencoder on a corpus");
  std::string ft_corpus, ft_formats, ft_out, ft_chir = "on", ft_proj = "off", ft_headw = "on";
  int ft_latents = 48, ft_steps = 20000, ft_batch = 32, ft_log_every = 10;
  double ft_lr = 1e-3, ft_lr_final = 0.0, ft_lsparse = 0.0, ft_valf = 0.1;
  std::uint64_t ft_seed = 1;
  fit->add_option("--corpus", ft_corpus, "corpus path")->required();
  fit->add_option("--formats", ft_formats, "formats override (default: corpus meta sidecar)");
  fit->add_option("--out", ft_out, "checkpoint output path")->required();
  add_fit_flags(fit, ft_latents, ft_lr, ft_lr_final, ft_steps, ft_batch, ft_lsparse, ft_chir,
                ft_proj, ft_headw, ft_seed, ft_valf, ft_log_every);

  auto* elbow = app.add_subcommand("elbow", "latent-count sweep with validation error");
  std::string el_corpus, el_formats, el_out, el_lvalues, el_chir = "off", el_proj = "on",
              el_headw = "on";
  int el_latents = 0, el_steps = 20000, el_batch = 32, el_log_every = 100;
  double el_lr = 1e-3, el_lr_final = 0.0, el_lsparse = 0.0, el_valf = 0.0;
  std::uint64_t el_seed = 1;
  elbow->add_option("--corpus", el_corpus, "corpus path")->required();
  elbow->add_option("--formats", el_formats, "formats override");
  elbow->add_option("--l-values", el_lvalues, "comma-separated latent counts")->required();
  elbow->add_option("--out", el_out, "CSV output path")->required();
  add_fit_flags(elbow, el_latents, el_lr, el_lr_final, el_steps, el_batch, el_lsparse, el_chir,
                el_proj, el_headw, el_seed, el_valf, el_log_every);

  auto* demo = app.add_subcommand("consistency-demo", "compare fine-tuning variants");
  std::string dm_corpus, dm_formats, dm_out, dm_checkpoint, dm_policy, dm_variant;
  double dm_lcons = 1.0, dm_lteach = 1.0, dm_lr = 1e-2, dm_lr_final = 0.0, dm_heldout = 0.1;
  int dm_base_steps = 8000, dm_branch_steps = 4000, dm_batch = 32, dm_ref = 0;
  std::uint64_t dm_seed = 1;
  demo->add_option("--corpus", dm_corpus, "complete corpus path")->required();
  demo->add_option("--formats", dm_formats, "formats override");
  demo->add_option("--checkpoint", dm_checkpoint, "frozen autoencoder checkpoint")->required();
  demo->add_option("--policy", dm_policy, "mask policy JSON file (default: tag == format name)");
  demo->add_option("--variant", dm_variant,
                   "run a subset: comma-separated separate|regularized|latent|hybrid");
  demo->add_option("--lambda-cons", dm_lcons, "consistency loss weight");
  demo->add_option("--lambda-teach", dm_lteach, "teacher loss weight");
  demo->add_option("--lr", dm_lr, "learning rate");
  demo->add_option("--lr-final", dm_lr_final, "decayed final learning rate");
  demo->add_option("--base-steps", dm_base_steps, "shared base training steps");
  demo->add_option("--branch-steps", dm_branch_steps, "per-variant fine-tuning steps");
  demo->add_option("--batch-size", dm_batch, "batch size");
  demo->add_option("--reference-format", dm_ref, "format index observed in 2D");
  demo->add_option("--heldout-fraction", dm_heldout, "held-out fraction");
  demo->add_option("--seed", dm_seed, "random seed");
  demo->add_option("--out", dm_out, "metrics CSV output path")->required();

  auto* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
  std::string ev_pred, ev_gt, ev_formats, ev_out;
  int ev_root = -1;
  eval->add_option("--pred", ev_pred, "prediction corpus path")->required();
  eval->add_option("--gt", ev_gt, "ground truth corpus path")->required();
  eval->add_option("--formats", ev_formats, "formats override (default: gt meta sidecar)");
  eval->add_option("--root", ev_root, "root joint index (default: first center joint)");
  eval->add_option("--out", ev_out, "report JSON output path")->required();

  auto* mask = app.add_subcommand("mask", "mask joints outside each tag's formats");
  std::string mk_corpus, mk_formats, mk_policy, mk_out;
  mask->add_option("--corpus", mk_corpus, "corpus path")->required();
  mask->add_option("--formats", mk_formats, "formats override");
  mask->add_option("--policy", mk_policy, "policy JSON file")->required();
  mask->add_option("--out", mk_out, "output corpus path")->required();

  auto* filter = app.add_subcommand("filter", "drop redundant consecutive poses");
  std::string fl_corpus, fl_formats, fl_out;
  double fl_threshold = 100.0;
  filter->add_option("--corpus", fl_corpus, "corpus path")->required();
  filter->add_option("--formats", fl_formats, "formats override");
  filter->add_option("--threshold-mm", fl_threshold, "movement threshold (mm)");
  filter->add_option("--out", fl_out, "output corpus path")->required();

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  std::string rp_manifest, rp_out_dir;
  replay->add_option("--manifest", rp_manifest, "manifest path")->required();
  replay->add_option("--out-dir", rp_out_dir, "redirect outputs into this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      json cfg;
      cfg["formats"] = formats_cfg_from_flag(sy_formats, "");
      cfg["latents"] = sy_latents;
      cfg["k"] = sy_k;
      cfg["sigma"] = sy_sigma;
      cfg["seed"] = sy_seed;
      cfg["dist_min"] = sy_dmin;
      cfg["dist_max"] = sy_dmax;
      cfg["tags"] = sy_tags;
      cfg["out"] = sy_out;
      return execute("synth", cfg, "");
    }
    auto fit_cfg = [&](const std::string& corpus, const std::string& formats, int latents,
                       double lr, double lr_final, int steps, int batch, double lsparse,
                       const std::string& chir, const std::string& proj, const std::string& headw,
                       std::uint64_t seed, double valf, int log_every) {
      json cfg;
      cfg["corpus"] = corpus;
      cfg["formats"] = formats_cfg_from_flag(formats, corpus);
      cfg["latents"] = latents;
      cfg["lr"] = lr;
      cfg["lr_final"] = lr_final;
      cfg["steps"] = steps;
      cfg["batch_size"] = batch;
      cfg["lambda_sparse"] = lsparse;
      cfg["chirality"] = flag_on(chir, "--chirality");
      cfg["projected_loss"] = flag_on(proj, "--projected-loss");
      cfg["head_weighting"] = flag_on(headw, "--head-weighting");
      cfg["seed"] = seed;
      cfg["val_fraction"] = valf;
      cfg["log_every"] = log_every;
      return cfg;
    };
    if (fit->parsed()) {
      json cfg = fit_cfg(ft_corpus, ft_formats, ft_latents, ft_lr, ft_lr_final, ft_steps,
                         ft_batch, ft_lsparse, ft_chir, ft_proj, ft_headw, ft_seed, ft_valf,
                         ft_log_every);
      cfg["out"] = ft_out;
      return execute("fit", cfg, "");
    }
    if (elbow->parsed()) {
      json cfg = fit_cfg(el_corpus, el_formats, el_latents, el_lr, el_lr_final, el_steps,
                         el_batch, el_lsparse, el_chir, el_proj, el_headw, el_seed, el_valf,
                         el_log_every);
      json ls = json::array();
      for (const auto& s : split_csv(el_lvalues)) ls.push_back(std::stoi(s));
      if (ls.empty()) throw ToolError("--l-values must not be empty");
      cfg["l_values"] = ls;
      cfg["out"] = el_out;
      return execute("elbow", cfg, "");
    }
    if (demo->parsed()) {
      json cfg;
      cfg["corpus"] = dm_corpus;
      cfg["formats"] = formats_cfg_from_flag(dm_formats, dm_corpus);
      cfg["checkpoint"] = dm_checkpoint;
      cfg["policy"] = dm_policy;
      if (dm_policy.empty()) {
        // Default policy: each tag selects the format of the same name.
        if (!cfg["formats"].contains("meta"))
          throw ToolError("--policy is required when no corpus meta sidecar is available");
        json meta = load_json_file(cfg["formats"]["meta"].get<std::string>());
        json policy = json::object();
        for (const auto& f : meta.at("formats"))
          policy[f.at("name").get<std::string>()] = json::array({f.at("name").get<std::string>()});
        cfg["policy_inline"] = policy.dump();
      } else {
        cfg["policy_inline"] = "";
      }
      cfg["variants"] = dm_variant;
      cfg["lambda_cons"] = dm_lcons;
      cfg["lambda_teach"] = dm_lteach;
      cfg["reference_format"] = dm_ref;
      cfg["lr"] = dm_lr;
      cfg["lr_final"] = dm_lr_final;
      cfg["base_steps"] = dm_base_steps;
      cfg["branch_steps"] = dm_branch_steps;
      cfg["batch_size"] = dm_batch;
      cfg["seed"] = dm_seed;
      cfg["heldout_fraction"] = dm_heldout;
      cfg["out"] = dm_out;
      return execute("consistency-demo", cfg, "");
    }
    if (eval->parsed()) {
      json cfg;
      cfg["pred"] = ev_pred;
      cfg["gt"] = ev_gt;
      cfg["formats"] = formats_cfg_from_flag(ev_formats, ev_gt);
      if (ev_root < 0) {
        CatalogPtr cat = resolve_catalog(cfg["formats"]);
        ev_root = acae_catalog_default_root(cat.get());
      }
      cfg["root"] = ev_root;
      cfg["out"] = ev_out;
      return execute("eval", cfg, "");
    }
    if (mask->parsed()) {
      json cfg;
      cfg["corpus"] = mk_corpus;
      cfg["formats"] = formats_cfg_from_flag(mk_formats, mk_corpus);
      cfg["policy"] = mk_policy;
      cfg["out"] = mk_out;
      return execute("mask", cfg, "");
    }
    if (filter->parsed()) {
      json cfg;
      cfg["corpus"] = fl_corpus;
      cfg["formats"] = formats_cfg_from_flag(fl_formats, fl_corpus);
      cfg["threshold_mm"] = fl_threshold;
      cfg["out"] = fl_out;
      return execute("filter", cfg, "");
    }
    if (replay->parsed()) {
      json manifest = load_json_file(rp_manifest);
      if (manifest.value("schema", "") != "acae-manifest-v1")
        throw ToolError("not an acae manifest: " + rp_manifest);
      if (!rp_out_dir.empty()) fs::create_directories(rp_out_dir);
      return execute(manifest.at("command").get<std::string>(), manifest.at("config"),
                     rp_out_dir);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
