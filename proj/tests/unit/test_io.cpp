#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "gslda/dataset.hpp"
#include "gslda/error.hpp"
#include "gslda/image_io.hpp"
#include "gslda/model_io.hpp"

using namespace gslda;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gslda_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("pgm round trip") {
  const fs::path dir = scratch("pgm");
  Rng rng(5);
  const GrayImage img = oracle::random_image(rng, 17, 9);
  write_pgm(dir / "a.pgm", img);
  const GrayImage back = read_pgm(dir / "a.pgm");
  CHECK(back.width == 17);
  CHECK(back.height == 9);
  CHECK(back.pixels == img.pixels);

  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5\n# comment\n2 1\n255\n";
    out.put(static_cast<char>(7));
    out.put(static_cast<char>(200));
  }
  const GrayImage c = read_pgm(dir / "c.pgm");
  CHECK(c.at(0, 0) == 7);
  CHECK(c.at(1, 0) == 200);

  {
    std::ofstream out(dir / "t.pgm", std::ios::binary);
    out << "P5\n4 4\n255\nab";
  }
  CHECK_THROWS_AS(read_pgm(dir / "t.pgm"), Error);
  CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), Error);
}

TEST_CASE("reals round trip exactly") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e17, 0.1})
    CHECK(std::bit_cast<std::uint64_t>(parse_real(format_real(v))) == std::bit_cast<std::uint64_t>(v));
  CHECK(std::isinf(parse_real(format_real(std::numeric_limits<double>::infinity()))));
  CHECK_THROWS_AS(parse_real("0x1.8p+1junk"), Error);
}

TEST_CASE("model round trip") {
  const CascadeModel model = fixture::small_model(21, TrainMethod::Gslda);
  REQUIRE(!model.nodes.empty());
  const std::string text = model_to_json(model);
  const CascadeModel back = model_from_json(text);
  CHECK(model_to_json(back) == text);
  CHECK(back.features == model.features);
  REQUIRE(back.nodes.size() == model.nodes.size());
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    CHECK(back.nodes[i].threshold == model.nodes[i].threshold);
    CHECK(back.nodes[i].coefficients == model.nodes[i].coefficients);
    CHECK(back.nodes[i].trained_by == model.nodes[i].trained_by);
  }
  CHECK(back.training.method == "gslda");

  const fs::path dir = scratch("model");
  save_model(dir / "m.json", model);
  CHECK(slurp(dir / "m.json") == text);
  CHECK(model_to_json(load_model(dir / "m.json")) == text);
}

TEST_CASE("malformed models name the problem") {
  const CascadeModel model = fixture::small_model(22);
  auto j = nlohmann::json::parse(model_to_json(model));

  SUBCASE("wrong type") {
    j["nodes"][0]["threshold"] = 3;
    CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("nodes[0].threshold"), Error);
  }
  SUBCASE("missing field") {
    j["nodes"][0].erase("coefficients");
    CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("coefficients"), Error);
  }
  SUBCASE("bad feature id") {
    j["nodes"][0]["stumps"][0]["feature_id"] = 100000;
    CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("feature_id"), Error);
  }
  SUBCASE("future version") {
    j["format_version"] = kModelFormatVersion + 1;
    CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("unknown version"), Error);
  }
  SUBCASE("not json") {
    CHECK_THROWS_WITH_AS(model_from_json("{nope"), doctest::Contains("schema error"), Error);
  }
}

TEST_CASE("csv round trips") {
  const fs::path dir = scratch("csv");
  const std::vector<GroundTruthBox> gt{{"img_a", 1, 2, 30, 31}, {"img_b", 0, 0, 5, 5}};
  write_ground_truth(dir / "gt.csv", gt);
  const auto gt2 = read_ground_truth(dir / "gt.csv");
  REQUIRE(gt2.size() == 2);
  CHECK(gt2[0].image_id == "img_a");
  CHECK(gt2[0].h == 31);

  const std::vector<RocPoint> roc{{"depth=1", 40, 0.9}, {"depth=2", 10, 1.0 / 3.0}};
  write_roc_csv(dir / "roc.csv", roc);
  const auto roc2 = read_roc_csv(dir / "roc.csv");
  REQUIRE(roc2.size() == 2);
  CHECK(roc2[1].operating_point == "depth=2");
  CHECK(roc2[1].false_positives == 10);
  CHECK(roc2[1].detection_rate == 1.0 / 3.0);

  const std::vector<ImageDetections> dets{{"img_a", {{3, 4, 24, 0.125, 0}, {5, 6, 28, -1.0 / 7.0, 0}}}};
  write_detections_csv(dir / "d.csv", dets);
  const auto dets2 = read_detections_csv(dir / "d.csv");
  REQUIRE(dets2.size() == 1);
  REQUIRE(dets2[0].windows.size() == 2);
  CHECK(dets2[0].windows[1].score == -1.0 / 7.0);
  CHECK(dets2[0].windows[1].side == 28);

  {
    std::ofstream out(dir / "bad.csv");
    out << "image_id,x,y,w,h\nimg,1,2,three,4\n";
  }
  CHECK_THROWS_WITH_AS(read_ground_truth(dir / "bad.csv"), doctest::Contains(":2:"), Error);
}

TEST_CASE("synthetic corpus on disk") {
  const fs::path dir = scratch("synth");
  const auto corpus = fixture::small_corpus(3, 2);
  const DatasetManifest m = write_synthetic_corpus(dir, corpus);
  const DatasetManifest m2 = load_manifest(dir / "manifest.json");
  CHECK(m2.base_window == 12);
  CHECK(m2.positives.size() == corpus.positives.size());
  CHECK(m2.test_images == m.test_images);

  const TrainingPool pool = load_training_pool(m2);
  CHECK(pool.positives.size() == 150);
  CHECK(pool.negative_reservoir.size() == 6);
  const TestSet test = load_test_set(m2);
  CHECK(test.images.size() == 2);
  CHECK(test.images[0].image_id == "test_0000");
  CHECK(test.truths.size() == corpus.truths.size());
  CHECK(image_id_for("test/test_0001.pgm") == "test_0001");

  std::ofstream(dir / "broken.json") << "{\"base_window\": 12}";
  CHECK_THROWS_AS(load_manifest(dir / "broken.json"), Error);
}
