#include "corpus.hpp"

#include "model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace acae {

PoseCorpus PoseCorpus::subset(const std::vector<int>& indices) const {
  PoseCorpus out;
  out.catalog = catalog;
  out.examples.reserve(indices.size());
  for (int k : indices) {
    require(k >= 0 && k < size(), Err::InvalidArgument, "subset index out of range");
    out.examples.push_back(examples[static_cast<std::size_t>(k)]);
  }
  return out;
}

void PoseCorpus::validate() const {
  require(size() >= 1, Err::EmptyCorpus, "corpus has no examples");
  for (const auto& ex : examples) {
    require(ex.pose.joint_count() == catalog.joint_count(), Err::ShapeMismatch,
            "example joint count does not match catalog");
    require(static_cast<int>(ex.pose.valid.size()) == catalog.joint_count(), Err::ShapeMismatch,
            "validity mask size does not match catalog");
    require(ex.pose.joints.allFinite(), Err::InvalidArgument, "non-finite joint coordinates");
    ex.cam.validate();
  }
}

void SynthConfig::validate() const {
  require(true_latent_count >= 4, Err::ConfigInvalid, "true latent count must be >= 4");
  require(!formats.empty(), Err::ConfigInvalid, "at least one skeleton format required");
  require(noise_sigma >= 0.0, Err::ConfigInvalid, "noise sigma must be >= 0");
  require(example_count >= 1, Err::ConfigInvalid, "example count must be >= 1");
  require(camera_distance_min > kMinDepthMm && camera_distance_max >= camera_distance_min,
          Err::ConfigInvalid, "invalid camera distance range");
  require(template_spread > 0.0 && jitter_sigma >= 0.0, Err::ConfigInvalid,
          "invalid template spread or jitter");
  require(focal_px > 0.0, Err::ConfigInvalid, "focal length must be positive");
  require(!tags.empty(), Err::ConfigInvalid, "at least one source tag required");
}

namespace {

// Sharpened positive block entries: u^4 keeps every entry strictly positive
// (full-rank mixing, convex rows after normalization) while concentrating
// each row's mass on a few latents so the planted structure is spread out.
Mat sharp_block(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      double u = rng.uniform_open();
      m(i, j) = u * u * u * u;
    }
  return m;
}

}  // namespace

std::pair<PoseCorpus, GroundTruthMixing> synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  JointCatalog catalog = build_catalog(cfg.formats);
  LatentPartition part;
  try {
    part = latent_partition(catalog, cfg.true_latent_count);
  } catch (const Error& e) {
    fail(Err::ConfigInvalid, std::string("true latent count unusable: ") + e.what());
  }

  Rng rng(derive_seed(cfg.seed, "synth"));

  GroundTruthMixing mixing;
  mixing.seed = cfg.seed;
  mixing.jitter_sigma = cfg.jitter_sigma;

  ChiralBlocks blocks;
  blocks.w1 = sharp_block(catalog.n_left, part.n_left, rng);
  blocks.w2 = sharp_block(catalog.n_left, part.n_left, rng);
  blocks.w3 = sharp_block(catalog.n_left, part.n_center, rng);
  blocks.w4 = sharp_block(catalog.n_center, part.n_left, rng);
  blocks.w5 = sharp_block(catalog.n_center, part.n_center, rng);
  mixing.mix_dec = normalize_rows(assemble_chiral(blocks), "planted mixing");

  mixing.latent_template.resize(cfg.true_latent_count, 3);
  for (int i = 0; i < cfg.true_latent_count; ++i)
    for (int c = 0; c < 3; ++c)
      mixing.latent_template(i, c) = rng.normal(0.0, cfg.template_spread);

  PoseCorpus corpus;
  corpus.catalog = catalog;
  corpus.examples.reserve(static_cast<std::size_t>(cfg.example_count));
  const int j_count = catalog.joint_count();
  for (int k = 0; k < cfg.example_count; ++k) {
    MatX3 latents = mixing.latent_template;
    for (int i = 0; i < cfg.true_latent_count; ++i)
      for (int c = 0; c < 3; ++c) latents(i, c) += rng.normal(0.0, cfg.jitter_sigma);
    Mat3 rot = rng.rotation();
    latents = (rot * latents.transpose()).transpose();
    Eigen::RowVector3d centroid = latents.colwise().mean();
    double dist = rng.uniform(cfg.camera_distance_min, cfg.camera_distance_max);
    latents.rowwise() -= centroid;
    latents.rowwise() += Eigen::RowVector3d(0.0, 0.0, dist);

    CorpusExample ex;
    ex.pose.joints = mixing.mix_dec * latents;
    if (cfg.noise_sigma > 0.0)
      for (int j = 0; j < j_count; ++j)
        for (int c = 0; c < 3; ++c) ex.pose.joints(j, c) += rng.normal(0.0, cfg.noise_sigma);
    ex.pose.valid.assign(static_cast<std::size_t>(j_count), 1);
    ex.cam.fx = cfg.focal_px;
    ex.cam.fy = cfg.focal_px;
    ex.cam.cx = cfg.principal_px;
    ex.cam.cy = cfg.principal_px;
    ex.tag = cfg.tags[static_cast<std::size_t>(k) % cfg.tags.size()];
    corpus.examples.push_back(std::move(ex));
  }
  return {std::move(corpus), std::move(mixing)};
}

PoseCorpus mask_subsets(const PoseCorpus& corpus, const MaskPolicy& policy) {
  corpus.validate();
  std::set<std::string> known_formats;
  for (const auto& fmt : corpus.catalog.formats) known_formats.insert(fmt.name);

  // tag -> per-joint keep mask
  std::map<std::string, std::vector<std::uint8_t>> keep;
  for (const auto& [tag, formats] : policy) {
    require(!formats.empty(), Err::EmptyLabelSet, "policy assigns no formats to tag '" + tag + "'");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(corpus.joint_count()), 0);
    for (const auto& name : formats) {
      require(known_formats.count(name) != 0, Err::UnknownTag,
              "policy references unknown format '" + name + "'");
      for (std::size_t d = 0; d < corpus.catalog.formats.size(); ++d)
        if (corpus.catalog.formats[d].name == name)
          for (int idx : corpus.catalog.format_joints[d]) mask[static_cast<std::size_t>(idx)] = 1;
    }
    keep[tag] = std::move(mask);
  }

  PoseCorpus out = corpus;
  for (auto& ex : out.examples) {
    auto it = keep.find(ex.tag);
    require(it != keep.end(), Err::UnknownTag, "no policy entry for tag '" + ex.tag + "'");
    for (int j = 0; j < corpus.joint_count(); ++j)
      ex.pose.valid[static_cast<std::size_t>(j)] =
          ex.pose.valid[static_cast<std::size_t>(j)] && it->second[static_cast<std::size_t>(j)];
  }
  return out;
}

std::vector<int> redundancy_filter_indices(const std::vector<Pose>& sequence,
                                           double threshold_mm) {
  require(threshold_mm > 0.0, Err::InvalidArgument, "filter threshold must be positive");
  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(sequence.size()); ++i) {
    if (kept.empty()) {
      kept.push_back(i);
      continue;
    }
    const Pose& pose = sequence[static_cast<std::size_t>(i)];
    const Pose& last = sequence[static_cast<std::size_t>(kept.back())];
    bool moved = false;
    bool any_common = false;
    for (int j = 0; j < pose.joint_count() && !moved; ++j) {
      if (!pose.valid[static_cast<std::size_t>(j)] || !last.valid[static_cast<std::size_t>(j)])
        continue;
      any_common = true;
      if ((pose.joints.row(j) - last.joints.row(j)).norm() >= threshold_mm) moved = true;
    }
    if (moved || !any_common) kept.push_back(i);
  }
  return kept;
}

std::vector<Pose> redundancy_filter(const std::vector<Pose>& sequence, double threshold_mm) {
  std::vector<Pose> kept;
  for (int i : redundancy_filter_indices(sequence, threshold_mm))
    kept.push_back(sequence[static_cast<std::size_t>(i)]);
  return kept;
}

PoseCorpus redundancy_filter_corpus(const PoseCorpus& corpus, double threshold_mm) {
  corpus.validate();
  std::vector<Pose> seq;
  seq.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) seq.push_back(ex.pose);
  return corpus.subset(redundancy_filter_indices(seq, threshold_mm));
}

namespace {

nlohmann::ordered_json example_to_json(const CorpusExample& ex) {
  nlohmann::ordered_json line;
  auto& joints = line["joints"] = nlohmann::ordered_json::array();
  for (int j = 0; j < ex.pose.joint_count(); ++j)
    joints.push_back({ex.pose.joints(j, 0), ex.pose.joints(j, 1), ex.pose.joints(j, 2)});
  auto& valid = line["valid"] = nlohmann::ordered_json::array();
  for (auto v : ex.pose.valid) valid.push_back(static_cast<bool>(v));
  line["cam"] = {{"fx", ex.cam.fx}, {"fy", ex.cam.fy}, {"cx", ex.cam.cx}, {"cy", ex.cam.cy}};
  line["tag"] = ex.tag;
  return line;
}

CorpusExample example_from_json(const nlohmann::json& line, int expected_joints) {
  CorpusExample ex;
  const auto& joints = line.at("joints");
  const auto& valid = line.at("valid");
  require(static_cast<int>(joints.size()) == expected_joints, Err::ShapeMismatch,
          "corpus line has " + std::to_string(joints.size()) + " joints, catalog expects " +
              std::to_string(expected_joints));
  require(joints.size() == valid.size(), Err::Parse, "joints/valid length mismatch");
  ex.pose.joints.resize(expected_joints, 3);
  for (int j = 0; j < expected_joints; ++j)
    for (int c = 0; c < 3; ++c)
      ex.pose.joints(j, c) = joints.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(c)).get<double>();
  ex.pose.valid.resize(static_cast<std::size_t>(expected_joints));
  for (int j = 0; j < expected_joints; ++j)
    ex.pose.valid[static_cast<std::size_t>(j)] = valid.at(static_cast<std::size_t>(j)).get<bool>() ? 1 : 0;
  const auto& cam = line.at("cam");
  ex.cam.fx = cam.at("fx").get<double>();
  ex.cam.fy = cam.at("fy").get<double>();
  ex.cam.cx = cam.at("cx").get<double>();
  ex.cam.cy = cam.at("cy").get<double>();
  ex.tag = line.at("tag").get<std::string>();
  return ex;
}

constexpr char kBinMagic[8] = {'A', 'C', 'A', 'E', 'B', 'I', 'N', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(in.good(), Err::Parse, "truncated binary corpus");
  return v;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void save_corpus_jsonl(const PoseCorpus& corpus, const std::string& path) {
  corpus.validate();
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write corpus file: " + path);
  for (const auto& ex : corpus.examples) out << example_to_json(ex).dump() << '\n';
  require(out.good(), Err::Io, "write failed: " + path);
}

void save_corpus_bin(const PoseCorpus& corpus, const std::string& path) {
  corpus.validate();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::Io, "cannot write corpus file: " + path);
  out.write(kBinMagic, sizeof(kBinMagic));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(corpus.joint_count()));
  write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(corpus.size()));
  for (const auto& ex : corpus.examples) {
    for (int j = 0; j < corpus.joint_count(); ++j)
      for (int c = 0; c < 3; ++c) write_raw<double>(out, ex.pose.joints(j, c));
    out.write(reinterpret_cast<const char*>(ex.pose.valid.data()),
              static_cast<std::streamsize>(ex.pose.valid.size()));
    write_raw<double>(out, ex.cam.fx);
    write_raw<double>(out, ex.cam.fy);
    write_raw<double>(out, ex.cam.cx);
    write_raw<double>(out, ex.cam.cy);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ex.tag.size()));
    out.write(ex.tag.data(), static_cast<std::streamsize>(ex.tag.size()));
  }
  require(out.good(), Err::Io, "write failed: " + path);
}

PoseCorpus load_corpus(const std::string& path, const JointCatalog& catalog) {
  PoseCorpus corpus;
  corpus.catalog = catalog;
  const int j_count = catalog.joint_count();
  if (has_suffix(path, ".bin")) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Err::Io, "cannot open corpus file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.good() && std::memcmp(magic, kBinMagic, sizeof(magic)) == 0, Err::Parse,
            "not a binary corpus file: " + path);
    auto file_j = read_raw<std::uint32_t>(in);
    require(static_cast<int>(file_j) == j_count, Err::ShapeMismatch,
            "corpus joint count does not match catalog");
    auto k_count = read_raw<std::uint64_t>(in);
    corpus.examples.reserve(k_count);
    for (std::uint64_t k = 0; k < k_count; ++k) {
      CorpusExample ex;
      ex.pose.joints.resize(j_count, 3);
      for (int j = 0; j < j_count; ++j)
        for (int c = 0; c < 3; ++c) ex.pose.joints(j, c) = read_raw<double>(in);
      ex.pose.valid.resize(static_cast<std::size_t>(j_count));
      in.read(reinterpret_cast<char*>(ex.pose.valid.data()), j_count);
      ex.cam.fx = read_raw<double>(in);
      ex.cam.fy = read_raw<double>(in);
      ex.cam.cx = read_raw<double>(in);
      ex.cam.cy = read_raw<double>(in);
      auto tag_len = read_raw<std::uint32_t>(in);
      require(tag_len < (1u << 20), Err::Parse, "corrupt tag length");
      ex.tag.resize(tag_len);
      in.read(ex.tag.data(), tag_len);
      require(in.good(), Err::Parse, "truncated binary corpus");
      corpus.examples.push_back(std::move(ex));
    }
  } else {
    std::ifstream in(path);
    require(in.good(), Err::Io, "cannot open corpus file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(line);
      } catch (const std::exception& e) {
        fail(Err::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
      }
      corpus.examples.push_back(example_from_json(doc, j_count));
    }
  }
  corpus.validate();
  return corpus;
}

void save_mixing_json(const GroundTruthMixing& mixing, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["schema"] = "acae-mixing-v1";
  doc["latent_count"] = mixing.latent_count();
  doc["jitter_sigma"] = mixing.jitter_sigma;
  doc["seed"] = mixing.seed;
  auto& dec = doc["mix_dec"] = nlohmann::ordered_json::array();
  for (int i = 0; i < mixing.mix_dec.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int j = 0; j < mixing.mix_dec.cols(); ++j) row.push_back(mixing.mix_dec(i, j));
    dec.push_back(std::move(row));
  }
  auto& tmpl = doc["latent_template"] = nlohmann::ordered_json::array();
  for (int i = 0; i < mixing.latent_template.rows(); ++i)
    tmpl.push_back({mixing.latent_template(i, 0), mixing.latent_template(i, 1),
                    mixing.latent_template(i, 2)});
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write mixing file: " + path);
  out << doc.dump(2) << '\n';
  require(out.good(), Err::Io, "write failed: " + path);
}

GroundTruthMixing load_mixing_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::Io, "cannot open mixing file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail(Err::Parse, "invalid JSON in " + path + ": " + e.what());
  }
  GroundTruthMixing mixing;
  mixing.jitter_sigma = doc.at("jitter_sigma").get<double>();
  mixing.seed = doc.at("seed").get<std::uint64_t>();
  const auto& dec = doc.at("mix_dec");
  require(!dec.empty(), Err::Parse, "empty mixing matrix");
  mixing.mix_dec.resize(static_cast<int>(dec.size()), static_cast<int>(dec.at(0).size()));
  for (int i = 0; i < mixing.mix_dec.rows(); ++i)
    for (int j = 0; j < mixing.mix_dec.cols(); ++j)
      mixing.mix_dec(i, j) = dec.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
  const auto& tmpl = doc.at("latent_template");
  mixing.latent_template.resize(static_cast<int>(tmpl.size()), 3);
  for (int i = 0; i < mixing.latent_template.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      mixing.latent_template(i, c) = tmpl.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
  return mixing;
}

}  // namespace acae
