#include "gslda/features.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gslda/error.hpp"
#include "gslda/random.hpp"

namespace gslda {

IntegralImage::IntegralImage(const GrayImage& image) : width_(image.width), height_(image.height) {
  if (image.width < 1 || image.height < 1) throw Error("empty image");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
    throw Error("pixel buffer size does not match image dimensions");
  table_.assign(static_cast<std::size_t>(width_ + 1) * (height_ + 1), 0);
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  for (int y = 0; y < height_; ++y) {
    std::int64_t row = 0;
    for (int x = 0; x < width_; ++x) {
      row += image.at(x, y);
      table_[(y + 1) * stride + x + 1] = table_[y * stride + x + 1] + row;
    }
  }
}

IntegralImage build_integral(const GrayImage& image) { return IntegralImage(image); }

std::string_view to_string(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoHorizontal: return "two_horizontal";
    case HaarKind::TwoVertical: return "two_vertical";
    case HaarKind::ThreeHorizontal: return "three_horizontal";
    case HaarKind::ThreeVertical: return "three_vertical";
    case HaarKind::FourDiagonal: return "four_diagonal";
  }
  return "unknown";
}

HaarKind haar_kind_from_string(std::string_view name) {
  for (HaarKind k : kAllHaarKinds)
    if (to_string(k) == name) return k;
  throw Error("unknown haar kind: " + std::string(name));
}

int haar_cells_x(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoHorizontal:
    case HaarKind::FourDiagonal: return 2;
    case HaarKind::ThreeHorizontal: return 3;
    default: return 1;
  }
}

int haar_cells_y(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoVertical:
    case HaarKind::FourDiagonal: return 2;
    case HaarKind::ThreeVertical: return 3;
    default: return 1;
  }
}

bool HaarFeature::valid() const {
  return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= base_window && y + h <= base_window &&
         w % haar_cells_x(kind) == 0 && h % haar_cells_y(kind) == 0;
}

std::vector<HaarFeature> enumerate_haar(const HaarEnumeration& p) {
  if (p.base_window < 1 || p.stride < 1 || p.min_size < 1 || p.min_size > p.base_window)
    throw Error("invalid haar enumeration parameters");
  std::vector<HaarFeature> out;
  for (HaarKind kind : p.kinds) {
    const int cx = haar_cells_x(kind);
    const int cy = haar_cells_y(kind);
    for (int y = 0; y < p.base_window; y += p.stride)
      for (int x = 0; x < p.base_window; x += p.stride)
        for (int h = cy; y + h <= p.base_window; h += cy) {
          if (h < p.min_size) continue;
          for (int w = cx; x + w <= p.base_window; w += cx) {
            if (w < p.min_size) continue;
            out.push_back({kind, x, y, w, h, p.base_window});
          }
        }
  }
  return out;
}

std::vector<HaarFeature> subsample_features(const std::vector<HaarFeature>& pool,
                                            std::size_t max_count, std::uint64_t seed) {
  if (pool.size() <= max_count) return pool;
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(max_count);
  std::sort(idx.begin(), idx.end());
  std::vector<HaarFeature> out;
  out.reserve(max_count);
  for (std::size_t i : idx) out.push_back(pool[i]);
  return out;
}

namespace {

int scaled(double base, double scale) { return static_cast<int>(std::floor(base * scale + 0.5)); }

}  // namespace

double eval_haar(const HaarFeature& f, const IntegralImage& ii, int offset_x, int offset_y,
                 double scale) {
  if (!(scale > 0.0)) throw Error("scale must be positive");
  const int cx = haar_cells_x(f.kind);
  const int cy = haar_cells_y(f.kind);
  int xs[4];
  int ys[4];
  const double cell_w = static_cast<double>(f.w) / cx;
  const double cell_h = static_cast<double>(f.h) / cy;
  for (int k = 0; k <= cx; ++k) xs[k] = offset_x + scaled(f.x + k * cell_w, scale);
  for (int k = 0; k <= cy; ++k) ys[k] = offset_y + scaled(f.y + k * cell_h, scale);
  if (xs[0] < 0 || ys[0] < 0 || xs[cx] > ii.width() || ys[cy] > ii.height())
    throw Error("feature footprint out of bounds");

  std::int64_t white_sum = 0;
  std::int64_t black_sum = 0;
  std::int64_t white_area = 0;
  std::int64_t black_area = 0;
  for (int j = 0; j < cy; ++j) {
    for (int i = 0; i < cx; ++i) {
      const int w = xs[i + 1] - xs[i];
      const int h = ys[j + 1] - ys[j];
      const std::int64_t s = ii.rect_sum(xs[i], ys[j], w, h);
      if ((i + j) % 2 == 0) {
        white_sum += s;
        white_area += static_cast<std::int64_t>(w) * h;
      } else {
        black_sum += s;
        black_area += static_cast<std::int64_t>(w) * h;
      }
    }
  }
  if (white_area <= 0 || black_area <= 0) throw Error("feature collapses at this scale");
  return static_cast<double>(white_sum) / static_cast<double>(white_area) -
         static_cast<double>(black_sum) / static_cast<double>(black_area);
}

ProjectionResult project_multidim(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (d < 1) throw Error("feature dimension must be at least 1");
  if (labels.size() != n) throw Error("label count does not match feature rows");
  Eigen::VectorXd mu_pos = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mu_neg = Eigen::VectorXd::Zero(d);
  Eigen::Index n_pos = 0;
  Eigen::Index n_neg = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) > 0) {
      mu_pos += features.row(i).transpose();
      ++n_pos;
    } else {
      mu_neg += features.row(i).transpose();
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) throw Error("degenerate class distribution");
  mu_pos /= static_cast<double>(n_pos);
  mu_neg /= static_cast<double>(n_neg);

  Eigen::MatrixXd centered(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    centered.row(i) = features.row(i) - (labels(i) > 0 ? mu_pos : mu_neg).transpose();
  Eigen::MatrixXd sw = centered.transpose() * centered;
  const double ridge = 1e-6 * std::max(sw.trace() / static_cast<double>(d), 1e-12);
  sw.diagonal().array() += ridge;

  Eigen::VectorXd w = sw.ldlt().solve(mu_pos - mu_neg);
  double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    w = Eigen::VectorXd::Unit(d, 0);
    norm = 1.0;
  }
  ProjectionResult out;
  out.projection.weights = w / norm;
  out.projection.bias = -out.projection.weights.dot(mu_pos + mu_neg) / 2.0;
  out.values = features * out.projection.weights;
  return out;
}

}  // namespace gslda
