#include "serialize.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace acae {

namespace {

nlohmann::ordered_json mat_to_json(const Mat& m) {
  auto arr = nlohmann::ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    arr.push_back(std::move(row));
  }
  return arr;
}

Mat mat_from_json(const nlohmann::json& arr) {
  require(arr.is_array() && !arr.empty() && arr.at(0).is_array(), Err::Parse,
          "expected a 2D array");
  Mat m(static_cast<int>(arr.size()), static_cast<int>(arr.at(0).size()));
  for (int i = 0; i < m.rows(); ++i) {
    const auto& row = arr.at(static_cast<std::size_t>(i));
    require(static_cast<int>(row.size()) == m.cols(), Err::Parse, "ragged 2D array");
    for (int j = 0; j < m.cols(); ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

nlohmann::ordered_json blocks_to_json(const ChiralBlocks& b) {
  nlohmann::ordered_json doc;
  doc["w1"] = mat_to_json(b.w1);
  doc["w2"] = mat_to_json(b.w2);
  doc["w3"] = mat_to_json(b.w3);
  doc["w4"] = mat_to_json(b.w4);
  doc["w5"] = mat_to_json(b.w5);
  return doc;
}

ChiralBlocks blocks_from_json(const nlohmann::json& doc) {
  ChiralBlocks b;
  b.w1 = mat_from_json(doc.at("w1"));
  b.w2 = mat_from_json(doc.at("w2"));
  b.w3 = mat_from_json(doc.at("w3"));
  b.w4 = mat_from_json(doc.at("w4"));
  b.w5 = mat_from_json(doc.at("w5"));
  b.validate();
  return b;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::Io, "cannot open file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail(Err::Parse, "invalid JSON in " + path + ": " + e.what());
  }
  return doc;
}

void write_json_file(const nlohmann::ordered_json& doc, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write file: " + path);
  out << doc.dump(2) << '\n';
  require(out.good(), Err::Io, "write failed: " + path);
}

}  // namespace

void save_weights_json(const AcaeWeights& weights, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["schema"] = "acae-checkpoint-v1";
  doc["J"] = weights.joint_count();
  doc["L"] = weights.latent_count();
  doc["catalog_hash"] = hex64(weights.catalog_hash);
  doc["chirality"] = weights.chiral;
  if (weights.chiral) {
    doc["raw_enc"] = blocks_to_json(weights.enc_blocks);
    doc["raw_dec"] = blocks_to_json(weights.dec_blocks);
  } else {
    doc["raw_enc"] = mat_to_json(weights.raw_enc);
    doc["raw_dec"] = mat_to_json(weights.raw_dec);
  }
  write_json_file(doc, path);
}

AcaeWeights load_weights_json(const std::string& path) {
  nlohmann::json doc = read_json_file(path);
  require(doc.value("schema", "") == "acae-checkpoint-v1", Err::Parse,
          "not an acae checkpoint: " + path);
  AcaeWeights w;
  w.chiral = doc.at("chirality").get<bool>();
  w.catalog_hash = std::stoull(doc.at("catalog_hash").get<std::string>(), nullptr, 16);
  if (w.chiral) {
    w.enc_blocks = blocks_from_json(doc.at("raw_enc"));
    w.dec_blocks = blocks_from_json(doc.at("raw_dec"));
  } else {
    w.raw_enc = mat_from_json(doc.at("raw_enc"));
    w.raw_dec = mat_from_json(doc.at("raw_dec"));
  }
  require(w.joint_count() == doc.at("J").get<int>() && w.latent_count() == doc.at("L").get<int>(),
          Err::Parse, "checkpoint dimensions are inconsistent: " + path);
  return w;
}

void save_catalog_meta(const JointCatalog& catalog, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["schema"] = "acae-formats-v1";
  auto& arr = doc["formats"] = nlohmann::ordered_json::array();
  for (const auto& fmt : catalog.formats) arr.push_back(fmt.to_json());
  write_json_file(doc, path);
}

JointCatalog load_catalog_meta(const std::string& path) {
  nlohmann::json doc = read_json_file(path);
  require(doc.value("schema", "") == "acae-formats-v1", Err::Parse,
          "not a format list: " + path);
  std::vector<SkeletonFormat> formats;
  for (const auto& f : doc.at("formats")) formats.push_back(SkeletonFormat::from_json(f));
  return build_catalog(formats);
}

}  // namespace acae
