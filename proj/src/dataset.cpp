#include "gslda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "gslda/error.hpp"
#include "gslda/image_io.hpp"
#include "gslda/model_io.hpp"

namespace gslda {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> string_list(const json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw Error(std::string("manifest: missing field '") + key + "'");
    return {};
  }
  if (!it->is_array()) throw Error(std::string("manifest: field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(std::string("manifest: field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::shared_ptr<const IntegralImage> load_integral(const fs::path& path) {
  return std::make_shared<const IntegralImage>(read_pgm(path));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& s, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(path.string() + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, const std::string& header,
                                                    std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw Error(path.string() + ": expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != columns)
      throw Error(path.string() + ":" + std::to_string(n) + ": expected " +
                  std::to_string(columns) + " columns");
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write");
  return out;
}

// Adds a soft-edged dark ellipse of the given depth.
void dark_ellipse(std::vector<double>& buf, int w, int h, double cx, double cy, double rx,
                  double ry, double depth) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      const double r = std::sqrt(dx * dx + dy * dy);
      const double t = std::clamp(1.5 - r, 0.0, 1.0);
      buf[static_cast<std::size_t>(y) * w + x] -= depth * t;
    }
}

void blit(GrayImage& image, int x0, int y0, int w, int h, const std::vector<double>& buf) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      image.at(x0 + x, y0 + y) = static_cast<std::uint8_t>(
          std::clamp(std::lround(buf[static_cast<std::size_t>(y) * w + x]), 0L, 255L));
}

void add_noise(std::vector<double>& buf, Rng& rng, double sd) {
  for (double& v : buf) v += rng.normal(0.0, sd);
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open manifest");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid manifest JSON: " + e.what());
  }
  if (!j.is_object()) throw Error(path.string() + ": manifest must be an object");
  DatasetManifest m;
  m.root = path.parent_path();
  auto bw = j.find("base_window");
  if (bw == j.end() || !bw->is_number_integer() || bw->get<int>() < 1)
    throw Error(path.string() + ": manifest field 'base_window' must be a positive integer");
  m.base_window = bw->get<int>();
  m.positives = string_list(j, "positives", true);
  m.negatives = string_list(j, "negatives", false);
  m.negative_reservoir = string_list(j, "negative_reservoir", false);
  m.test_images = string_list(j, "test_images", false);
  if (auto gt = j.find("ground_truth"); gt != j.end()) {
    if (!gt->is_string()) throw Error(path.string() + ": manifest field 'ground_truth' must be a string");
    m.ground_truth = gt->get<std::string>();
  }
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
  json j;
  j["base_window"] = m.base_window;
  j["positives"] = m.positives;
  j["negatives"] = m.negatives;
  j["negative_reservoir"] = m.negative_reservoir;
  j["test_images"] = m.test_images;
  j["ground_truth"] = m.ground_truth;
  open_out(path) << j.dump(2) << "\n";
}

TrainingPool load_training_pool(const DatasetManifest& m, double validation_fraction) {
  TrainingPool pool;
  pool.validation_fraction = validation_fraction;
  for (const auto& rel : m.positives) {
    auto ii = load_integral(m.root / rel);
    if (ii->width() != m.base_window || ii->height() != m.base_window)
      throw Error((m.root / rel).string() + ": positive patch is " + std::to_string(ii->width()) +
                  "x" + std::to_string(ii->height()) + ", expected " +
                  std::to_string(m.base_window) + "x" + std::to_string(m.base_window));
    pool.positives.push_back({ii, 0, 0, 1.0});
  }
  for (const auto& rel : m.negatives) {
    auto ii = load_integral(m.root / rel);
    if (ii->width() < m.base_window || ii->height() < m.base_window)
      throw Error((m.root / rel).string() + ": negative patch smaller than the base window");
    pool.negatives.push_back({ii, 0, 0, 1.0});
  }
  for (const auto& rel : m.negative_reservoir) {
    auto ii = load_integral(m.root / rel);
    if (ii->width() < m.base_window || ii->height() < m.base_window)
      throw Error((m.root / rel).string() + ": reservoir image smaller than the base window");
    pool.negative_reservoir.push_back(ii);
  }
  if (pool.positives.empty()) throw Error("manifest lists no positives");
  return pool;
}

std::string image_id_for(const std::string& relative_path) {
  return fs::path(relative_path).stem().string();
}

TestSet load_test_set(const DatasetManifest& m) {
  if (m.ground_truth.empty()) throw Error("manifest has no ground truth");
  TestSet set;
  for (const auto& rel : m.test_images)
    set.images.push_back({image_id_for(rel), load_integral(m.root / rel)});
  set.truths = read_ground_truth(m.root / m.ground_truth);
  if (set.images.empty()) throw Error("manifest lists no test images");
  return set;
}

std::vector<GroundTruthBox> read_ground_truth(const fs::path& path) {
  std::vector<GroundTruthBox> out;
  std::size_t line = 1;
  for (const auto& r : read_csv_rows(path, "image_id,x,y,w,h", 5)) {
    ++line;
    GroundTruthBox b{r[0], parse_int(r[1], path, line), parse_int(r[2], path, line),
                     parse_int(r[3], path, line), parse_int(r[4], path, line)};
    if (b.w <= 0 || b.h <= 0) throw Error(path.string() + ": box with nonpositive size");
    out.push_back(b);
  }
  return out;
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruthBox>& boxes) {
  auto out = open_out(path);
  out << "image_id,x,y,w,h\n";
  for (const auto& b : boxes) out << b.image_id << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
}

void write_roc_csv(const fs::path& path, const std::vector<RocPoint>& points) {
  auto out = open_out(path);
  out << "operating_point,false_positives,detection_rate\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g", p.detection_rate);
    out << p.operating_point << ',' << p.false_positives << ',' << buf << '\n';
  }
}

std::vector<RocPoint> read_roc_csv(const fs::path& path) {
  std::vector<RocPoint> out;
  for (const auto& r : read_csv_rows(path, "operating_point,false_positives,detection_rate", 3))
    out.push_back({r[0], static_cast<std::size_t>(std::stoull(r[1])), std::stod(r[2])});
  return out;
}

void write_detections_csv(const fs::path& path, const std::vector<ImageDetections>& detections) {
  auto out = open_out(path);
  out << "image_id,x,y,side,score\n";
  for (const auto& img : detections)
    for (const auto& w : img.windows)
      out << img.image_id << ',' << w.x << ',' << w.y << ',' << w.side << ','
          << format_real(w.score) << '\n';
}

std::vector<ImageDetections> read_detections_csv(const fs::path& path) {
  std::vector<ImageDetections> out;
  std::size_t line = 1;
  for (const auto& r : read_csv_rows(path, "image_id,x,y,side,score", 5)) {
    ++line;
    if (out.empty() || out.back().image_id != r[0]) out.push_back({r[0], {}});
    DetectionWindow w;
    w.x = parse_int(r[1], path, line);
    w.y = parse_int(r[2], path, line);
    w.side = parse_int(r[3], path, line);
    w.score = parse_real(r[4]);
    out.back().windows.push_back(w);
  }
  return out;
}

void draw_face(GrayImage& image, int x0, int y0, int side, Rng& rng, double noise_sd) {
  const double s = side;
  const int n = side;
  std::vector<double> buf(static_cast<std::size_t>(n) * n);
  const double bg = rng.uniform(90.0, 190.0);
  const double gx = rng.uniform(-1.5, 1.5) * 16.0 / s;
  const double gy = rng.uniform(-1.5, 1.5) * 16.0 / s;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      buf[static_cast<std::size_t>(y) * n + x] = bg + gx * (x - s / 2) + gy * (y - s / 2);

  const double jx = rng.uniform(-0.06, 0.06) * s;
  const double jy = rng.uniform(-0.06, 0.06) * s;
  const double eye_r = rng.uniform(0.08, 0.12) * s;
  const double eye_depth = rng.uniform(50.0, 100.0);
  const double eye_sep = rng.uniform(0.36, 0.44) * s;
  for (int k = -1; k <= 1; k += 2)
    dark_ellipse(buf, n, n, 0.5 * s + jx + k * eye_sep / 2 + rng.uniform(-0.02, 0.02) * s,
                 0.36 * s + jy + rng.uniform(-0.02, 0.02) * s, eye_r, eye_r, eye_depth);
  dark_ellipse(buf, n, n, 0.5 * s + jx, rng.uniform(0.70, 0.76) * s + jy,
               rng.uniform(0.18, 0.24) * s, rng.uniform(0.05, 0.07) * s, rng.uniform(40.0, 90.0));
  add_noise(buf, rng, noise_sd);
  blit(image, x0, y0, n, n, buf);
}

void draw_texture(GrayImage& image, int x0, int y0, int w, int h, Rng& rng) {
  std::vector<double> buf(static_cast<std::size_t>(w) * h);
  const double bg = rng.uniform(40.0, 215.0);
  const double gx = rng.uniform(-2.0, 2.0) * 16.0 / w;
  const double gy = rng.uniform(-2.0, 2.0) * 16.0 / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      buf[static_cast<std::size_t>(y) * w + x] = bg + gx * (x - w / 2.0) + gy * (y - h / 2.0);

  const double scale = std::min(w, h);
  switch (rng.below(5)) {
    case 0:  // smooth
      break;
    case 1: {  // rectangles
      const int count = rng.between(2, 7);
      for (int k = 0; k < count; ++k) {
        const int rx = rng.between(0, w - 1);
        const int ry = rng.between(0, h - 1);
        const int rw = rng.between(1, std::max(1, w / 2));
        const int rh = rng.between(1, std::max(1, h / 2));
        const double delta = rng.uniform(-80.0, 80.0);
        for (int y = ry; y < std::min(h, ry + rh); ++y)
          for (int x = rx; x < std::min(w, rx + rw); ++x) buf[static_cast<std::size_t>(y) * w + x] += delta;
      }
      break;
    }
    case 2: {  // blobs
      const int count = rng.between(1, 5);
      for (int k = 0; k < count; ++k) {
        const double r = rng.uniform(0.05, 0.25) * scale;
        dark_ellipse(buf, w, h, rng.uniform(0.0, w), rng.uniform(0.0, h), r,
                     r * rng.uniform(0.5, 2.0), rng.uniform(-90.0, 90.0));
      }
      break;
    }
    case 3: {  // stripes
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double period = rng.uniform(0.15, 0.8) * scale;
      const double amp = rng.uniform(15.0, 60.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          buf[static_cast<std::size_t>(y) * w + x] +=
              amp * std::sin(2.0 * std::numbers::pi * (x * std::cos(theta) + y * std::sin(theta)) /
                                 period + phase);
      break;
    }
    default:  // heavy noise
      add_noise(buf, rng, rng.uniform(10.0, 40.0));
      break;
  }
  add_noise(buf, rng, rng.uniform(4.0, 14.0));
  blit(image, x0, y0, w, h, buf);
}

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.size < 8) throw Error("synthetic patch size must be at least 8");
  if (spec.reservoir_side < spec.size || spec.test_side < spec.size)
    throw Error("synthetic image sides must be at least the patch size");
  SyntheticCorpus c;
  c.size = spec.size;
  const int s = spec.size;
  Rng rng(spec.seed);

  for (std::size_t i = 0; i < spec.n_pos; ++i) {
    GrayImage img(s, s);
    draw_face(img, 0, 0, s, rng, spec.noise_sd);
    c.positives.push_back(std::move(img));
  }
  for (std::size_t i = 0; i < spec.n_neg; ++i) {
    GrayImage img(s, s);
    draw_texture(img, 0, 0, s, s, rng);
    c.negatives.push_back(std::move(img));
  }
  auto background = [&](int side) {
    GrayImage img(side, side);
    draw_texture(img, 0, 0, side, side, rng);
    const int patches = rng.between(2, 5);
    for (int k = 0; k < patches; ++k) {
      const int pw = rng.between(s, side);
      const int ph = rng.between(s, side);
      draw_texture(img, rng.between(0, side - pw), rng.between(0, side - ph), pw, ph, rng);
    }
    return img;
  };
  for (std::size_t i = 0; i < spec.n_reservoir; ++i) c.reservoir.push_back(background(spec.reservoir_side));

  for (std::size_t i = 0; i < spec.n_test; ++i) {
    GrayImage img = background(spec.test_side);
    char id[32];
    std::snprintf(id, sizeof id, "test_%04zu", i);
    std::vector<GroundTruthBox> placed;
    const int faces = rng.between(1, 3);
    for (int k = 0, tries = 0; k < faces && tries < 50; ++tries) {
      const int side = static_cast<int>(std::lround(s * std::pow(1.2, rng.between(0, 4))));
      if (side > spec.test_side) continue;
      const int x = rng.between(0, spec.test_side - side);
      const int y = rng.between(0, spec.test_side - side);
      const bool clash = std::any_of(placed.begin(), placed.end(), [&](const GroundTruthBox& b) {
        return x < b.x + b.w && b.x < x + side && y < b.y + b.h && b.y < y + side;
      });
      if (clash) continue;
      draw_face(img, x, y, side, rng, spec.noise_sd);
      placed.push_back({id, x, y, side, side});
      ++k;
    }
    c.truths.insert(c.truths.end(), placed.begin(), placed.end());
    c.test_images.push_back(std::move(img));
  }
  return c;
}

DatasetManifest write_synthetic_corpus(const fs::path& dir, const SyntheticCorpus& c) {
  std::error_code ec;
  for (const char* sub : {"pos", "neg", "reservoir", "test"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error((dir / sub).string() + ": cannot create directory: " + ec.message());
  }
  DatasetManifest m;
  m.root = dir;
  m.base_window = c.size;
  auto emit = [&](const char* sub, const char* stem, const std::vector<GrayImage>& images,
                  std::vector<std::string>& list) {
    char name[64];
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::snprintf(name, sizeof name, "%s/%s_%04zu.pgm", sub, stem, i);
      write_pgm(dir / name, images[i]);
      list.emplace_back(name);
    }
  };
  emit("pos", "pos", c.positives, m.positives);
  emit("neg", "neg", c.negatives, m.negatives);
  emit("reservoir", "bg", c.reservoir, m.negative_reservoir);
  emit("test", "test", c.test_images, m.test_images);
  m.ground_truth = "gt.csv";
  write_ground_truth(dir / m.ground_truth, c.truths);
  save_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace gslda
