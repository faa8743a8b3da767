#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gslda/cascade.hpp"
#include "gslda/features.hpp"
#include "gslda/windows.hpp"

namespace gslda {

struct DetectionWindow {
  int x = 0;
  int y = 0;
  int side = 0;
  double score = 0.0;  // margin of the last node
  std::size_t stages_passed = 0;
};

struct GroundTruthBox {
  std::string image_id;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct ScanProfile {
  std::size_t windows = 0;
  std::size_t haar_evaluations = 0;

  ScanProfile& operator+=(const ScanProfile& o) {
    windows += o.windows;
    haar_evaluations += o.haar_evaluations;
    return *this;
  }
};

struct ScanResult {
  std::vector<DetectionWindow> detections;
  ScanProfile profile;
};

// Runs every window of the scan through the cascade with early rejection.
// `depth` limits the cascade to its first nodes. Images smaller than the
// base window give an empty result.
ScanResult scan_image(const CascadeModel& model, const IntegralImage& ii, const ScanParams& params,
                      std::optional<std::size_t> depth = std::nullopt);

double iou(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh);
double iou(const DetectionWindow& a, const DetectionWindow& b);
double iou(const DetectionWindow& d, const GroundTruthBox& t);

// Groups windows by the transitive closure of IoU >= 0.5 and emits one
// averaged window per group with at least min_neighbors members.
std::vector<DetectionWindow> merge_detections(const std::vector<DetectionWindow>& windows,
                                              std::size_t min_neighbors = 2);

struct ImageDetections {
  std::string image_id;
  std::vector<DetectionWindow> windows;
};

struct MatchResult {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t missed = 0;
};

// Greedy in descending score order; a detection takes the best unmatched
// truth of its image when IoU > 0.5. Everything else is a false positive.
MatchResult match_detections(const std::vector<ImageDetections>& detections,
                             const std::vector<GroundTruthBox>& truths);

struct RocPoint {
  std::string operating_point;
  std::size_t false_positives = 0;
  double detection_rate = 0.0;
};

struct TestImage {
  std::string image_id;
  std::shared_ptr<const IntegralImage> image;
};

struct TestSet {
  std::vector<TestImage> images;
  std::vector<GroundTruthBox> truths;
};

enum class RocMode { Depth, Threshold };

struct RocConfig {
  RocMode mode = RocMode::Depth;
  ScanParams scan;
  // ROC points count raw windows unless merge is set.
  bool merge = false;
  std::size_t min_neighbors = 2;
  std::size_t threshold_points = 10;
};

// Depth mode: one point per cascade prefix. Threshold mode: the last node's
// threshold shifted over quantiles of its margins, plus a +inf point. Sorted
// by false positives ascending.
std::vector<RocPoint> roc_curve(const CascadeModel& model, const TestSet& test,
                                const RocConfig& cfg);

double avg_features_per_window(const ScanProfile& profile);

}  // namespace gslda
