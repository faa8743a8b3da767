#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gslda/cascade.hpp"
#include "gslda/detector.hpp"
#include "gslda/features.hpp"
#include "gslda/random.hpp"

namespace gslda {

// Paths are relative to the manifest's directory.
struct DatasetManifest {
  std::filesystem::path root;
  int base_window = 24;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  std::vector<std::string> negative_reservoir;
  std::vector<std::string> test_images;
  std::string ground_truth;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Positives must be exactly base-window sized; negatives at least that size
// (their top-left base window is used).
TrainingPool load_training_pool(const DatasetManifest& manifest, double validation_fraction = 0.2);
TestSet load_test_set(const DatasetManifest& manifest);

// The image id of a test image is its file stem.
std::string image_id_for(const std::string& relative_path);

std::vector<GroundTruthBox> read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthBox>& boxes);

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points);
std::vector<RocPoint> read_roc_csv(const std::filesystem::path& path);
void write_detections_csv(const std::filesystem::path& path,
                          const std::vector<ImageDetections>& detections);
std::vector<ImageDetections> read_detections_csv(const std::filesystem::path& path);

struct SyntheticSpec {
  std::uint64_t seed = 1;
  int size = 16;
  std::size_t n_pos = 1000;
  std::size_t n_neg = 1000;
  std::size_t n_reservoir = 150;
  int reservoir_side = 64;
  std::size_t n_test = 10;
  int test_side = 96;
  double noise_sd = 12.0;
};

struct SyntheticCorpus {
  int size = 16;
  std::vector<GrayImage> positives;
  std::vector<GrayImage> negatives;
  std::vector<GrayImage> reservoir;  // background only
  std::vector<GrayImage> test_images;
  std::vector<GroundTruthBox> truths;  // image ids "test_0000", ...
};

// Face-like blobs (two dark dots over a dark bar) with jitter, contrast and
// noise variation; textured negatives and backgrounds; test images with
// planted faces at several scales.
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

// Writes the corpus as PGM files plus manifest.json and gt.csv under `dir`.
DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir,
                                       const SyntheticCorpus& corpus);

// Face pattern drawn into the square [x, x+side) x [y, y+side).
void draw_face(GrayImage& image, int x, int y, int side, Rng& rng, double noise_sd = 12.0);
void draw_texture(GrayImage& image, int x, int y, int w, int h, Rng& rng);

}  // namespace gslda
