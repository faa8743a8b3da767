#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace gslda {

// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Summed-area table: table(y, x) is the exact pixel sum over [0,y) x [0,x).
class IntegralImage {
 public:
  IntegralImage() = default;
  explicit IntegralImage(const GrayImage& image);

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t table(int y, int x) const {
    return table_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }
  // Sum over the rectangle [x, x+w) x [y, y+h).
  std::int64_t rect_sum(int x, int y, int w, int h) const {
    return table(y + h, x + w) - table(y, x + w) - table(y + h, x) + table(y, x);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> table_;
};

IntegralImage build_integral(const GrayImage& image);

enum class HaarKind : std::uint8_t {
  TwoHorizontal,    // white left | black right
  TwoVertical,      // white top / black bottom
  ThreeHorizontal,  // white | black | white
  ThreeVertical,
  FourDiagonal,     // white top-left and bottom-right
};

inline constexpr HaarKind kAllHaarKinds[] = {HaarKind::TwoHorizontal, HaarKind::TwoVertical,
                                             HaarKind::ThreeHorizontal, HaarKind::ThreeVertical,
                                             HaarKind::FourDiagonal};

std::string_view to_string(HaarKind kind);
HaarKind haar_kind_from_string(std::string_view name);
// Number of cells along x and y the footprint is split into.
int haar_cells_x(HaarKind kind);
int haar_cells_y(HaarKind kind);

// Rectangle feature inside a square base window. (x, y, w, h) is the whole
// footprint; w and h are multiples of the kind's cell counts.
struct HaarFeature {
  HaarKind kind = HaarKind::TwoHorizontal;
  int x = 0;
  int y = 0;
  int w = 2;
  int h = 1;
  int base_window = 24;

  bool valid() const;
  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

struct HaarEnumeration {
  int base_window = 24;
  int stride = 1;
  int min_size = 1;
  std::vector<HaarKind> kinds{std::begin(kAllHaarKinds), std::end(kAllHaarKinds)};
};

// Every admissible feature, ordered by kind, then y, x, h, w. Positions step
// by `stride`; footprint edges are all cell multiples that are >= min_size.
std::vector<HaarFeature> enumerate_haar(const HaarEnumeration& params);

// Deterministic subset of at most max_count features, original order kept.
std::vector<HaarFeature> subsample_features(const std::vector<HaarFeature>& pool,
                                            std::size_t max_count, std::uint64_t seed);

// Mean intensity of the white cells minus mean of the black cells, with the
// feature geometry scaled by `scale` (corners rounded independently) and
// placed at (offset_x, offset_y). Throws when the footprint leaves the image.
double eval_haar(const HaarFeature& f, const IntegralImage& ii, int offset_x, int offset_y,
                 double scale);

// LDA projection of a d-dimensional feature to one dimension.
struct ProjectionVector {
  Eigen::VectorXd weights;  // unit norm
  double bias = 0.0;        // -w . (mu_pos + mu_neg) / 2

  Eigen::Index dim() const { return weights.size(); }
  double project(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x); }
};

struct ProjectionResult {
  ProjectionVector projection;
  Eigen::VectorXd values;  // w . x_i for every row
};

// features: N x d, labels: +1/-1.
ProjectionResult project_multidim(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels);

}  // namespace gslda
