#include "gslda/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "gslda/error.hpp"
#include "gslda/parallel.hpp"

namespace gslda {

namespace {

struct WindowOutcome {
  WindowEvaluation eval;
  WindowGeometry geom;
};

std::vector<WindowOutcome> evaluate_all(const CascadeModel& model, const IntegralImage& ii,
                                        const ScanParams& params,
                                        std::optional<std::size_t> depth) {
  if (ii.width() < model.base_window || ii.height() < model.base_window) return {};
  const auto windows = enumerate_windows(ii.width(), ii.height(), model.base_window, params);
  std::vector<WindowOutcome> out(windows.size());
  parallel_for(windows.size(), [&](std::size_t i) {
    out[i] = {evaluate_window(model, ii, windows[i], depth), windows[i]};
  });
  return out;
}

DetectionWindow to_detection(const WindowOutcome& o) {
  return {o.geom.x, o.geom.y, o.geom.side, o.eval.score, o.eval.stages_passed};
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

std::string format_offset(double offset) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "offset=%.17g", offset);
  return buf;
}

}  // namespace

ScanResult scan_image(const CascadeModel& model, const IntegralImage& ii, const ScanParams& params,
                      std::optional<std::size_t> depth) {
  if (!(params.scale_factor > 1.0)) throw Error("scale factor must exceed 1");
  ScanResult result;
  for (const auto& o : evaluate_all(model, ii, params, depth)) {
    ++result.profile.windows;
    result.profile.haar_evaluations += o.eval.haar_evaluations;
    if (o.eval.accepted) result.detections.push_back(to_detection(o));
  }
  return result;
}

double iou(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
  const int ix = std::max(0, std::min(ax + aw, bx + bw) - std::max(ax, bx));
  const int iy = std::max(0, std::min(ay + ah, by + bh) - std::max(ay, by));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(aw) * ah + static_cast<double>(bw) * bh - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou(const DetectionWindow& a, const DetectionWindow& b) {
  return iou(a.x, a.y, a.side, a.side, b.x, b.y, b.side, b.side);
}

double iou(const DetectionWindow& d, const GroundTruthBox& t) {
  return iou(d.x, d.y, d.side, d.side, t.x, t.y, t.w, t.h);
}

std::vector<DetectionWindow> merge_detections(const std::vector<DetectionWindow>& windows,
                                              std::size_t min_neighbors) {
  const std::size_t n = windows.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (iou(windows[i], windows[j]) >= 0.5) {
        const std::size_t a = find_root(parent, i);
        const std::size_t b = find_root(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  // Groups keyed by their first member, so output follows input order.
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find_root(parent, i)].push_back(i);

  std::vector<DetectionWindow> out;
  for (const auto& [root, members] : groups) {
    if (members.size() < std::max<std::size_t>(1, min_neighbors)) continue;
    double x = 0, y = 0, x2 = 0, y2 = 0;
    DetectionWindow merged;
    merged.score = -std::numeric_limits<double>::infinity();
    for (std::size_t m : members) {
      const auto& w = windows[m];
      x += w.x;
      y += w.y;
      x2 += w.x + w.side;
      y2 += w.y + w.side;
      merged.score = std::max(merged.score, w.score);
      merged.stages_passed = std::max(merged.stages_passed, w.stages_passed);
    }
    const auto k = static_cast<double>(members.size());
    merged.x = static_cast<int>(std::lround(x / k));
    merged.y = static_cast<int>(std::lround(y / k));
    merged.side = std::max(1, static_cast<int>(std::lround((x2 - x + y2 - y) / (2.0 * k))));
    out.push_back(merged);
  }
  return out;
}

MatchResult match_detections(const std::vector<ImageDetections>& detections,
                             const std::vector<GroundTruthBox>& truths) {
  struct Ref {
    const DetectionWindow* window;
    const std::string* image;
  };
  std::vector<Ref> all;
  for (const auto& img : detections)
    for (const auto& w : img.windows) all.push_back({&w, &img.image_id});
  std::stable_sort(all.begin(), all.end(),
                   [](const Ref& a, const Ref& b) { return a.window->score > b.window->score; });

  std::vector<char> taken(truths.size(), 0);
  MatchResult r;
  for (const Ref& d : all) {
    double best = 0.5;
    std::optional<std::size_t> hit;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t] || truths[t].image_id != *d.image) continue;
      const double o = iou(*d.window, truths[t]);
      if (o > best) {
        best = o;
        hit = t;
      }
    }
    if (hit) {
      taken[*hit] = 1;
      ++r.true_positives;
    } else {
      ++r.false_positives;
    }
  }
  r.missed = truths.size() - r.true_positives;
  return r;
}

std::vector<RocPoint> roc_curve(const CascadeModel& model, const TestSet& test,
                                const RocConfig& cfg) {
  if (test.images.empty()) throw Error("empty test set");
  const double truth_count = static_cast<double>(test.truths.size());
  auto point = [&](std::string label, const std::vector<ImageDetections>& dets) {
    const MatchResult m = match_detections(dets, test.truths);
    return RocPoint{std::move(label), m.false_positives,
                    truth_count > 0 ? static_cast<double>(m.true_positives) / truth_count : 0.0};
  };
  auto merged = [&](const std::string& id, std::vector<DetectionWindow> raw) {
    return ImageDetections{id, cfg.merge ? merge_detections(raw, cfg.min_neighbors) : std::move(raw)};
  };

  std::vector<RocPoint> points;
  if (cfg.mode == RocMode::Depth) {
    for (std::size_t depth = 1; depth <= model.nodes.size(); ++depth) {
      std::vector<ImageDetections> dets;
      for (const auto& img : test.images)
        dets.push_back(merged(img.image_id,
                              scan_image(model, *img.image, cfg.scan, depth).detections));
      points.push_back(point("depth=" + std::to_string(depth), dets));
    }
  } else {
    if (model.nodes.empty()) throw Error("threshold mode needs at least one node");
    const std::size_t last = model.nodes.size() - 1;
    // Windows reaching the last node, scored by its margin.
    std::vector<std::vector<DetectionWindow>> reach(test.images.size());
    std::vector<double> margins;
    for (std::size_t i = 0; i < test.images.size(); ++i) {
      for (const auto& o : evaluate_all(model, *test.images[i].image, cfg.scan, std::nullopt)) {
        if (o.eval.stages_passed < last) continue;
        reach[i].push_back(to_detection(o));
        margins.push_back(o.eval.score);
      }
    }
    std::sort(margins.begin(), margins.end());
    std::vector<double> offsets{0.0};
    const std::size_t q = std::max<std::size_t>(1, cfg.threshold_points);
    if (!margins.empty())
      for (std::size_t k = 0; k <= q; ++k) {
        const auto idx = static_cast<std::size_t>(
            std::lround(static_cast<double>(k) / static_cast<double>(q) *
                        static_cast<double>(margins.size() - 1)));
        offsets.push_back(-margins[idx]);
      }
    offsets.push_back(-std::numeric_limits<double>::infinity());
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    for (double off : offsets) {
      std::vector<ImageDetections> dets;
      for (std::size_t i = 0; i < test.images.size(); ++i) {
        std::vector<DetectionWindow> kept;
        for (auto w : reach[i])
          if (w.score + off >= 0.0) {
            w.score += off;
            kept.push_back(w);
          }
        dets.push_back(merged(test.images[i].image_id, std::move(kept)));
      }
      points.push_back(point(std::isinf(off) ? "offset=-inf" : format_offset(off), dets));
    }
  }
  std::stable_sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.false_positives < b.false_positives;
  });
  return points;
}

double avg_features_per_window(const ScanProfile& profile) {
  if (profile.windows == 0) throw Error("no windows scanned");
  return static_cast<double>(profile.haar_evaluations) / static_cast<double>(profile.windows);
}

}  // namespace gslda
