#pragma once

#include "geometry.hpp"

#include <string>

namespace acae {

inline constexpr double kPckThresholdMm = 100.0;
inline constexpr double kCpsThresholdMm = 200.0;

// Mean Euclidean joint error after aligning both poses at the root joint.
double mpjpe(const Pose& pred, const Pose& gt, int root_index);

// Mean Euclidean joint error after optimal similarity (Procrustes) alignment;
// reflections are excluded via the determinant correction.
double pmpjpe(const Pose& pred, const Pose& gt);

// Percentage of valid joints within threshold after root alignment (strict <).
double pck(const Pose& pred, const Pose& gt, double threshold_mm, int root_index);

// Whether every valid joint is within threshold after root alignment.
bool pose_all_correct(const Pose& pred, const Pose& gt, double threshold_mm, int root_index);

// Percentage of poses whose joints are all within threshold (strict <).
double cps(const std::vector<Pose>& pred, const std::vector<Pose>& gt, double threshold_mm,
           int root_index);

struct PoseMetrics {
  double mpjpe = 0.0;
  double pmpjpe = 0.0;
  double pck100 = 0.0;
  bool correct200 = false;
};

struct MetricReport {
  double mpjpe = 0.0;   // mm, mean of per-pose values
  double pmpjpe = 0.0;  // mm
  double pck100 = 0.0;  // percent
  double cps200 = 0.0;  // percent of poses
  std::vector<PoseMetrics> poses;
};

// Per-pose metrics averaged unweighted over the corpus.
MetricReport evaluate_poses(const std::vector<Pose>& pred, const std::vector<Pose>& gt,
                            int root_index);

void save_report_json(const MetricReport& report, const std::string& path);
void save_report_csv(const MetricReport& report, const std::string& path);

}  // namespace acae
