#include "metrics.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace acae {

namespace {

std::vector<int> common_valid(const Pose& pred, const Pose& gt) {
  require(pred.joint_count() == gt.joint_count(), Err::ShapeMismatch,
          "prediction and ground truth joint counts differ");
  std::vector<int> idx;
  for (int j = 0; j < pred.joint_count(); ++j)
    if (pred.valid[static_cast<std::size_t>(j)] && gt.valid[static_cast<std::size_t>(j)])
      idx.push_back(j);
  return idx;
}

void check_root(const Pose& pred, const Pose& gt, int root_index) {
  require(root_index >= 0 && root_index < pred.joint_count(), Err::InvalidRoot,
          "root index out of range");
  require(pred.valid[static_cast<std::size_t>(root_index)] &&
              gt.valid[static_cast<std::size_t>(root_index)],
          Err::InvalidRoot, "root joint is not valid in both poses");
}

}  // namespace

double mpjpe(const Pose& pred, const Pose& gt, int root_index) {
  check_root(pred, gt, root_index);
  auto idx = common_valid(pred, gt);
  require(!idx.empty(), Err::NoValidJoints, "no jointly valid joints");
  Eigen::RowVector3d pr = pred.joints.row(root_index);
  Eigen::RowVector3d gr = gt.joints.row(root_index);
  double sum = 0.0;
  for (int j : idx)
    sum += ((pred.joints.row(j) - pr) - (gt.joints.row(j) - gr)).norm();
  return sum / static_cast<double>(idx.size());
}

double pmpjpe(const Pose& pred, const Pose& gt) {
  auto idx = common_valid(pred, gt);
  require(static_cast<int>(idx.size()) >= 3, Err::DegenerateConfiguration,
          "Procrustes alignment needs at least 3 valid joints");
  const int n = static_cast<int>(idx.size());
  MatX3 x(n, 3), y(n, 3);
  for (int i = 0; i < n; ++i) {
    x.row(i) = pred.joints.row(idx[static_cast<std::size_t>(i)]);
    y.row(i) = gt.joints.row(idx[static_cast<std::size_t>(i)]);
  }
  Eigen::RowVector3d mx = x.colwise().mean();
  Eigen::RowVector3d my = y.colwise().mean();
  MatX3 xc = x.rowwise() - mx;
  MatX3 yc = y.rowwise() - my;

  double var_x = xc.squaredNorm();
  Mat3 cov = yc.transpose() * xc;  // aligns pred onto gt
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  {
    // Non-collinearity: the centered prediction must span at least a plane.
    Eigen::JacobiSVD<MatX3> shape(xc);
    double s0 = shape.singularValues()(0);
    require(s0 > 0.0 && shape.singularValues()(1) > 1e-9 * s0, Err::DegenerateConfiguration,
            "valid joints are collinear");
  }
  Vec3 d = Vec3::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2) = -1.0;
  Mat3 rot = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  double scale = (svd.singularValues().array() * d.array()).sum() / var_x;

  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += (scale * (rot * xc.row(i).transpose()) - yc.row(i).transpose()).norm();
  return sum / static_cast<double>(n);
}

double pck(const Pose& pred, const Pose& gt, double threshold_mm, int root_index) {
  check_root(pred, gt, root_index);
  auto idx = common_valid(pred, gt);
  require(!idx.empty(), Err::NoValidJoints, "no jointly valid joints");
  Eigen::RowVector3d pr = pred.joints.row(root_index);
  Eigen::RowVector3d gr = gt.joints.row(root_index);
  int hits = 0;
  for (int j : idx)
    if (((pred.joints.row(j) - pr) - (gt.joints.row(j) - gr)).norm() < threshold_mm) ++hits;
  return 100.0 * hits / static_cast<double>(idx.size());
}

bool pose_all_correct(const Pose& pred, const Pose& gt, double threshold_mm, int root_index) {
  check_root(pred, gt, root_index);
  auto idx = common_valid(pred, gt);
  require(!idx.empty(), Err::NoValidJoints, "no jointly valid joints");
  Eigen::RowVector3d pr = pred.joints.row(root_index);
  Eigen::RowVector3d gr = gt.joints.row(root_index);
  for (int j : idx)
    if (((pred.joints.row(j) - pr) - (gt.joints.row(j) - gr)).norm() >= threshold_mm) return false;
  return true;
}

double cps(const std::vector<Pose>& pred, const std::vector<Pose>& gt, double threshold_mm,
           int root_index) {
  require(pred.size() == gt.size(), Err::ShapeMismatch,
          "prediction and ground truth counts differ");
  require(!pred.empty(), Err::EmptyCorpus, "no poses to evaluate");
  int correct = 0;
  for (std::size_t k = 0; k < pred.size(); ++k)
    if (pose_all_correct(pred[k], gt[k], threshold_mm, root_index)) ++correct;
  return 100.0 * correct / static_cast<double>(pred.size());
}

MetricReport evaluate_poses(const std::vector<Pose>& pred, const std::vector<Pose>& gt,
                            int root_index) {
  require(pred.size() == gt.size(), Err::ShapeMismatch,
          "prediction and ground truth counts differ");
  require(!pred.empty(), Err::EmptyCorpus, "no poses to evaluate");
  MetricReport report;
  report.poses.resize(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    PoseMetrics& m = report.poses[k];
    m.mpjpe = mpjpe(pred[k], gt[k], root_index);
    m.pmpjpe = pmpjpe(pred[k], gt[k]);
    m.pck100 = pck(pred[k], gt[k], kPckThresholdMm, root_index);
    m.correct200 = pose_all_correct(pred[k], gt[k], kCpsThresholdMm, root_index);
    report.mpjpe += m.mpjpe;
    report.pmpjpe += m.pmpjpe;
    report.pck100 += m.pck100;
    report.cps200 += m.correct200 ? 100.0 : 0.0;
  }
  double n = static_cast<double>(pred.size());
  report.mpjpe /= n;
  report.pmpjpe /= n;
  report.pck100 /= n;
  report.cps200 /= n;
  return report;
}

void save_report_json(const MetricReport& report, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["mpjpe"] = report.mpjpe;
  doc["pmpjpe"] = report.pmpjpe;
  doc["pck100"] = report.pck100;
  doc["cps200"] = report.cps200;
  auto& poses = doc["poses"] = nlohmann::ordered_json::array();
  for (const auto& m : report.poses) {
    nlohmann::ordered_json p;
    p["mpjpe"] = m.mpjpe;
    p["pmpjpe"] = m.pmpjpe;
    p["pck100"] = m.pck100;
    p["correct200"] = m.correct200;
    poses.push_back(std::move(p));
  }
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write report: " + path);
  out << doc.dump(2) << '\n';
  require(out.good(), Err::Io, "write failed: " + path);
}

void save_report_csv(const MetricReport& report, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), Err::Io, "cannot write report: " + path);
  char buf[200];
  out << "mpjpe,pmpjpe,pck100,cps200\n";
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", report.mpjpe, report.pmpjpe,
                report.pck100, report.cps200);
  out << buf;
  require(out.good(), Err::Io, "write failed: " + path);
}

}  // namespace acae
