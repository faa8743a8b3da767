#pragma once

#include <vector>

namespace gslda {

struct ScanParams {
  double scale_factor = 1.2;
  int step = 1;  // at base scale; grows with the window
};

struct WindowGeometry {
  int x = 0;
  int y = 0;
  int side = 0;
  double scale = 1.0;
};

// Square windows of side round(base * f^s) for s = 0, 1, ... while they fit,
// shifted by max(1, round(step * f^s)). Ordered by scale, then row, then column.
std::vector<WindowGeometry> enumerate_windows(int width, int height, int base_window,
                                              const ScanParams& params);

}  // namespace gslda
