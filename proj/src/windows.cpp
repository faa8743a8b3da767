#include "gslda/windows.hpp"

#include <algorithm>
#include <cmath>

#include "gslda/error.hpp"

namespace gslda {

std::vector<WindowGeometry> enumerate_windows(int width, int height, int base_window,
                                              const ScanParams& params) {
  if (!(params.scale_factor > 1.0)) throw Error("scale factor must exceed 1");
  if (params.step < 1) throw Error("step must be at least 1");
  if (base_window < 1) throw Error("base window must be positive");
  std::vector<WindowGeometry> out;
  const int limit = std::min(width, height);
  for (int s = 0;; ++s) {
    const double scale = std::pow(params.scale_factor, s);
    const int side = static_cast<int>(std::floor(base_window * scale + 0.5));
    if (side > limit) break;
    const int step = std::max(1, static_cast<int>(std::floor(params.step * scale + 0.5)));
    for (int y = 0; y + side <= height; y += step)
      for (int x = 0; x + side <= width; x += step) out.push_back({x, y, side, scale});
  }
  return out;
}

}  // namespace gslda
