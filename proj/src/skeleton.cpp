#include "skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace acae {

namespace {

bool has_prefix(const std::string& s, const std::string& prefix) {
  return s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

std::string side_name(Side s) {
  switch (s) {
    case Side::Left:
      return "left";
    case Side::Right:
      return "right";
    case Side::Center:
      return "center";
  }
  return "center";
}

Side side_from_name(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "center") return Side::Center;
  fail(Err::Parse, "unknown side label '" + s + "'");
}

SkeletonFormat SkeletonFormat::from_json(const nlohmann::json& doc) {
  require(doc.is_object() && doc.contains("name") && doc.contains("joints"), Err::Parse,
          "skeleton format document must contain 'name' and 'joints'");
  SkeletonFormat fmt;
  fmt.name = doc.at("name").get<std::string>();
  for (const auto& j : doc.at("joints")) {
    JointDef def;
    def.name = j.at("name").get<std::string>();
    def.side = side_from_name(j.at("side").get<std::string>());
    def.is_head = j.value("is_head", false);
    fmt.joints.push_back(std::move(def));
  }
  return fmt;
}

SkeletonFormat SkeletonFormat::load_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::Io, "cannot open skeleton format file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail(Err::Parse, "invalid JSON in " + path + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::ordered_json SkeletonFormat::to_json() const {
  nlohmann::ordered_json doc;
  doc["name"] = name;
  auto& arr = doc["joints"] = nlohmann::ordered_json::array();
  for (const auto& j : joints) {
    nlohmann::ordered_json jd;
    jd["name"] = j.name;
    jd["side"] = side_name(j.side);
    jd["is_head"] = j.is_head;
    arr.push_back(std::move(jd));
  }
  return doc;
}

Vec JointCatalog::loss_weights() const {
  Vec w(joint_count());
  for (int i = 0; i < joint_count(); ++i)
    w[i] = joints[static_cast<std::size_t>(i)].is_head ? 10.0 : 1.0;
  return w;
}

int JointCatalog::default_root() const { return n_center > 0 ? center_begin() : 0; }

std::uint64_t JointCatalog::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& fmt : formats) {
    h = fnv64(fmt.name, h);
    h = fnv64("\x1f", h);
    for (const auto& j : fmt.joints) {
      h = fnv64(j.name, h);
      h = fnv64(side_name(j.side), h);
      h = fnv64(j.is_head ? "H" : "-", h);
      h = fnv64("\x1e", h);
    }
  }
  return h;
}

JointCatalog build_catalog(const std::vector<SkeletonFormat>& formats) {
  require(!formats.empty(), Err::InvalidArgument, "catalog needs at least one format");
  {
    std::set<std::string> names;
    for (const auto& fmt : formats)
      require(names.insert(fmt.name).second, Err::InvalidArgument,
              "duplicate skeleton format name '" + fmt.name + "'");
  }

  JointCatalog cat;
  cat.formats = formats;

  struct Entry {
    int format;
    int local;  // index within the format
  };
  std::vector<Entry> left, right_by_left, center;

  for (int d = 0; d < static_cast<int>(formats.size()); ++d) {
    const auto& fmt = formats[static_cast<std::size_t>(d)];
    std::unordered_map<std::string, int> by_name;
    for (int i = 0; i < fmt.joint_count(); ++i) {
      const auto& j = fmt.joints[static_cast<std::size_t>(i)];
      require(by_name.emplace(j.name, i).second, Err::InvalidArgument,
              "duplicate joint name '" + j.name + "' in format '" + fmt.name + "'");
    }
    for (int i = 0; i < fmt.joint_count(); ++i) {
      const auto& j = fmt.joints[static_cast<std::size_t>(i)];
      switch (j.side) {
        case Side::Left: {
          require(has_prefix(j.name, "left_"), Err::AsymmetricFormat,
                  "left joint '" + j.name + "' in '" + fmt.name + "' must be named left_<x>");
          std::string counterpart = "right_" + j.name.substr(5);
          auto it = by_name.find(counterpart);
          require(it != by_name.end() &&
                      fmt.joints[static_cast<std::size_t>(it->second)].side == Side::Right,
                  Err::AsymmetricFormat,
                  "left joint '" + j.name + "' in '" + fmt.name + "' has no right counterpart");
          left.push_back({d, i});
          right_by_left.push_back({d, it->second});
          break;
        }
        case Side::Right: {
          require(has_prefix(j.name, "right_"), Err::AsymmetricFormat,
                  "right joint '" + j.name + "' in '" + fmt.name + "' must be named right_<x>");
          std::string counterpart = "left_" + j.name.substr(6);
          auto it = by_name.find(counterpart);
          require(it != by_name.end() &&
                      fmt.joints[static_cast<std::size_t>(it->second)].side == Side::Left,
                  Err::AsymmetricFormat,
                  "right joint '" + j.name + "' in '" + fmt.name + "' has no left counterpart");
          break;
        }
        case Side::Center:
          require(!has_prefix(j.name, "left_") && !has_prefix(j.name, "right_"),
                  Err::AsymmetricFormat,
                  "center joint '" + j.name + "' in '" + fmt.name +
                      "' must not use a left_/right_ prefix");
          center.push_back({d, i});
          break;
      }
    }
  }

  cat.n_left = static_cast<int>(left.size());
  cat.n_right = static_cast<int>(right_by_left.size());
  cat.n_center = static_cast<int>(center.size());

  int total = 0;
  for (const auto& fmt : formats) total += fmt.joint_count();
  require(cat.n_left + cat.n_right + cat.n_center == total, Err::AsymmetricFormat,
          "catalog block sizes do not cover all joints");

  cat.format_joints.assign(formats.size(), {});
  for (std::size_t d = 0; d < formats.size(); ++d)
    cat.format_joints[d].assign(static_cast<std::size_t>(formats[d].joint_count()), -1);

  auto append = [&](const Entry& e) {
    const auto& j = formats[static_cast<std::size_t>(e.format)].joints[static_cast<std::size_t>(e.local)];
    CatalogJoint cj;
    cj.format = e.format;
    cj.name = j.name;
    cj.side = j.side;
    cj.is_head = j.is_head;
    cat.format_joints[static_cast<std::size_t>(e.format)][static_cast<std::size_t>(e.local)] =
        static_cast<int>(cat.joints.size());
    cat.joints.push_back(std::move(cj));
  };
  for (const auto& e : left) append(e);
  for (const auto& e : right_by_left) append(e);
  for (const auto& e : center) append(e);

  cat.mirror.resize(static_cast<std::size_t>(cat.joint_count()));
  for (int i = 0; i < cat.n_left; ++i) {
    cat.mirror[static_cast<std::size_t>(i)] = cat.right_begin() + i;
    cat.mirror[static_cast<std::size_t>(cat.right_begin() + i)] = i;
  }
  for (int i = cat.center_begin(); i < cat.joint_count(); ++i)
    cat.mirror[static_cast<std::size_t>(i)] = i;

  return cat;
}

LatentPartition latent_partition(const JointCatalog& catalog, int latent_count) {
  require(latent_count >= 3, Err::TooFewLatents,
          "latent partition needs at least 3 latents, got " + std::to_string(latent_count));
  LatentPartition p;
  p.n_left = static_cast<int>(std::lround(latent_count * catalog.left_fraction()));
  p.n_right = p.n_left;
  p.n_center = latent_count - 2 * p.n_left;
  require(p.n_left >= 1 && p.n_center >= 1, Err::TooFewLatents,
          "latent partition degenerate for L=" + std::to_string(latent_count) + " (left " +
              std::to_string(p.n_left) + ", center " + std::to_string(p.n_center) + ")");
  return p;
}

namespace {

JointDef center(const char* name, bool head = false) { return {name, Side::Center, head}; }

void pair(std::vector<JointDef>& out, const std::string& base, bool head = false) {
  out.push_back({"left_" + base, Side::Left, head});
  out.push_back({"right_" + base, Side::Right, head});
}

SkeletonFormat make_alpha() {
  SkeletonFormat f;
  f.name = "alpha";
  f.joints = {center("pelvis"), center("spine"), center("head", true)};
  for (const char* b : {"shoulder", "elbow", "wrist", "hip", "knee", "ankle"}) pair(f.joints, b);
  return f;
}

SkeletonFormat make_beta() {
  SkeletonFormat f;
  f.name = "beta";
  f.joints = {center("neck"), center("torso"), center("nose", true)};
  pair(f.joints, "eye", true);
  for (const char* b : {"shoulder", "elbow", "hand", "knee", "foot"}) pair(f.joints, b);
  return f;
}

SkeletonFormat make_gamma() {
  SkeletonFormat f;
  f.name = "gamma";
  f.joints = {center("root"), center("chest"), center("jaw", true), center("crown", true)};
  for (const char* b :
       {"hip", "knee", "ankle", "heel", "toe", "shoulder", "elbow", "wrist", "palm", "finger"})
    pair(f.joints, b);
  for (const char* b : {"ear", "temple", "brow"}) pair(f.joints, b, true);
  return f;
}

SkeletonFormat make_mini() {
  SkeletonFormat f;
  f.name = "mini";
  f.joints = {center("pelvis")};
  pair(f.joints, "hip");
  pair(f.joints, "shoulder");
  return f;
}

}  // namespace

std::vector<SkeletonFormat> builtin_formats(const std::string& name) {
  if (name == "mini") return {make_mini()};
  if (name == "demo1") return {make_alpha()};
  if (name == "demo2") return {make_alpha(), make_beta()};
  if (name == "demo3") return {make_alpha(), make_beta(), make_gamma()};
  fail(Err::InvalidArgument, "unknown builtin format set '" + name + "'");
}

}  // namespace acae
