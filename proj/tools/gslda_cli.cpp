// gslda: train, run and evaluate cascaded detectors.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>

#include "gslda/cascade.hpp"
#include "gslda/dataset.hpp"
#include "gslda/detector.hpp"
#include "gslda/error.hpp"
#include "gslda/experiments.hpp"
#include "gslda/image_io.hpp"
#include "gslda/model_io.hpp"
#include "gslda/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kGoalNotMet = 3 };

struct Shared {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string config;
};

struct TrainOpts {
  std::string manifest;
  std::string out = "model.json";
  std::string log;
  std::string method = "gslda";
  double dmin = 0.995;
  double fmax = 0.5;
  double f_target = 1e-3;
  double gamma = 1.0;
  double asym_k = 1.0;
  double prune_eps = 0.1;
  bool dual_pass = false;
  std::size_t max_stumps = 200;
  std::size_t max_stages = 30;
  std::size_t max_features = 4000;
  int feature_stride = 1;
  std::size_t negatives_per_stage = 0;
  double validation_fraction = 0.2;
};

struct DetectOpts {
  std::string model;
  std::vector<std::string> inputs;
  std::string out;
  double scale_factor = 1.2;
  int step = 1;
  std::size_t min_neighbors = 2;
  bool profile = false;
  bool no_merge = false;
};

struct EvalOpts {
  std::string model;
  std::string manifest;
  std::string mode = "depth";
  std::string out = "roc.csv";
  double scale_factor = 1.2;
  int step = 1;
  std::size_t min_neighbors = 2;
  bool merge_roc = false;
};

struct ToyOpts {
  std::size_t trials = 20;
  std::size_t rounds = 4;
  std::size_t n_pos = 100;
  std::size_t n_neg = 2000;
  std::string points;
  std::string report;
};

struct SynthOpts {
  std::string out = "synth";
  std::size_t n_pos = 1000;
  std::size_t n_neg = 1000;
  int size = 16;
  std::size_t n_reservoir = 150;
  std::size_t n_test = 10;
};

// Keys of a --config JSON object fill options not given on the command line.
using Setter = std::function<void(const json&)>;

template <typename T>
Setter setter(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

void apply_config(const CLI::App& cmd, const std::string& path,
                  const std::map<std::string, Setter>& setters) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw gslda::Error(path + ": cannot open config");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw gslda::Error(path + ": invalid config JSON: " + e.what());
  }
  if (!j.is_object()) throw gslda::Error(path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw gslda::Error(path + ": unknown config key '" + key + "'");
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const CLI::Option* opt = cmd.get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) continue;
    try {
      it->second(value);
    } catch (const json::exception&) {
      throw gslda::Error(path + ": config key '" + key + "' has the wrong type");
    }
  }
}

std::string json_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_train(const CLI::App& cmd, const Shared& shared, TrainOpts o) {
  apply_config(cmd, shared.config,
               {{"manifest", setter(o.manifest)}, {"out", setter(o.out)},
                {"log", setter(o.log)}, {"method", setter(o.method)},
                {"dmin", setter(o.dmin)}, {"fmax", setter(o.fmax)},
                {"f_target", setter(o.f_target)}, {"gamma", setter(o.gamma)},
                {"asym_k", setter(o.asym_k)}, {"prune_eps", setter(o.prune_eps)},
                {"dual_pass", setter(o.dual_pass)}, {"max_stumps", setter(o.max_stumps)},
                {"max_stages", setter(o.max_stages)}, {"max_features", setter(o.max_features)},
                {"feature_stride", setter(o.feature_stride)},
                {"negatives_per_stage", setter(o.negatives_per_stage)},
                {"validation_fraction", setter(o.validation_fraction)}});
  if (o.manifest.empty()) throw CLI::RequiredError("--manifest");

  const auto manifest = gslda::load_manifest(o.manifest);
  const auto pool = gslda::load_training_pool(manifest, o.validation_fraction);

  gslda::HaarEnumeration en;
  en.base_window = manifest.base_window;
  en.stride = o.feature_stride;
  const auto features =
      gslda::subsample_features(gslda::enumerate_haar(en), o.max_features, shared.seed);

  gslda::CascadeConfig cfg;
  cfg.seed = shared.seed;
  cfg.f_target = o.f_target;
  cfg.max_stages = o.max_stages;
  cfg.negatives_per_stage = o.negatives_per_stage;
  cfg.goal.d_min = o.dmin;
  cfg.goal.f_max = o.fmax;
  cfg.goal.max_stumps = o.max_stumps;
  cfg.node.method = gslda::train_method_from_string(o.method);
  cfg.node.scatter.gamma = o.gamma;
  cfg.node.scatter.dual_pass = o.dual_pass;
  cfg.node.boosting.asym_k = o.asym_k;
  cfg.node.boosting.prune_epsilon = o.prune_eps;
  cfg.bootstrap.seed = shared.seed;
  if (o.f_target >= 1.0) std::cerr << "warning: f_target >= 1, no stage will be trained\n";

  const std::string log_path = o.log.empty() ? o.out + ".log.jsonl" : o.log;
  std::ofstream log(log_path);
  if (!log) throw gslda::Error(log_path + ": cannot write stage log");

  auto on_stage = [&](const gslda::StageRecord& r) {
    log << "{\"stage\":" << r.stage << ",\"stumps\":" << r.stumps << ",\"d\":" << json_real(r.d)
        << ",\"f\":" << json_real(r.f) << ",\"D\":" << json_real(r.D)
        << ",\"F\":" << json_real(r.F) << ",\"goal_met\":" << (r.goal_met ? "true" : "false")
        << ",\"negatives\":" << r.negatives << ",\"seconds\":" << json_real(r.seconds) << "}\n";
    log.flush();
    std::cerr << "stage " << r.stage << ": " << r.stumps << " stumps, d=" << r.d << " f=" << r.f
              << " D=" << r.D << " F=" << r.F << (r.goal_met ? "" : " (goal not met)") << "\n";
  };
  const auto result = gslda::train_cascade(pool, features, manifest.base_window, cfg, on_stage);
  gslda::save_model(o.out, result.model);
  if (result.bootstrap_exhausted) std::cerr << "note: bootstrapping exhausted the reservoir\n";

  for (const auto& node : result.model.nodes)
    if (!node.goal_met) {
      std::cerr << "warning: at least one stage did not meet its goal\n";
      return kGoalNotMet;
    }
  return kOk;
}

std::vector<fs::path> collect_images(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".pgm") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

int run_detect(const CLI::App& cmd, const Shared& shared, DetectOpts o) {
  apply_config(cmd, shared.config,
               {{"model", setter(o.model)}, {"out", setter(o.out)},
                {"scale_factor", setter(o.scale_factor)}, {"step", setter(o.step)},
                {"min_neighbors", setter(o.min_neighbors)}, {"profile", setter(o.profile)},
                {"no_merge", setter(o.no_merge)}});
  if (o.model.empty()) throw CLI::RequiredError("--model");
  const auto model = gslda::load_model(o.model);
  const gslda::ScanParams scan{o.scale_factor, o.step};

  std::vector<gslda::ImageDetections> all;
  gslda::ScanProfile profile;
  std::size_t ok = 0;
  const auto images = collect_images(o.inputs);
  for (const auto& path : images) {
    gslda::GrayImage img;
    try {
      img = gslda::read_pgm(path);
    } catch (const gslda::Error& e) {
      std::cerr << "warning: skipping " << e.what() << "\n";
      continue;
    }
    ++ok;
    auto res = gslda::scan_image(model, gslda::IntegralImage(img), scan);
    profile += res.profile;
    all.push_back({path.stem().string(), o.no_merge ? std::move(res.detections)
                                                    : gslda::merge_detections(res.detections,
                                                                              o.min_neighbors)});
  }

  if (o.out.empty()) {
    std::cout << "image_id,x,y,side,score\n";
    for (const auto& img : all)
      for (const auto& w : img.windows)
        std::cout << img.image_id << ',' << w.x << ',' << w.y << ',' << w.side << ','
                  << gslda::format_real(w.score) << '\n';
  } else {
    gslda::write_detections_csv(o.out, all);
  }
  if (o.profile) {
    std::cerr << "profile: windows=" << profile.windows
              << " haar_evaluations=" << profile.haar_evaluations;
    if (profile.windows > 0)
      std::cerr << " avg_features_per_window=" << gslda::avg_features_per_window(profile);
    std::cerr << "\n";
  }
  if (!images.empty() && ok == 0) return kDataError;
  return kOk;
}

int run_eval(const CLI::App& cmd, const Shared& shared, EvalOpts o) {
  apply_config(cmd, shared.config,
               {{"model", setter(o.model)}, {"manifest", setter(o.manifest)},
                {"mode", setter(o.mode)}, {"out", setter(o.out)},
                {"scale_factor", setter(o.scale_factor)}, {"step", setter(o.step)},
                {"min_neighbors", setter(o.min_neighbors)}, {"merge_roc", setter(o.merge_roc)}});
  if (o.model.empty()) throw CLI::RequiredError("--model");
  if (o.manifest.empty()) throw CLI::RequiredError("--manifest");
  if (o.mode != "depth" && o.mode != "threshold")
    throw CLI::ValidationError("--mode", "must be depth or threshold");

  const auto model = gslda::load_model(o.model);
  const auto test = gslda::load_test_set(gslda::load_manifest(o.manifest));
  gslda::RocConfig rc;
  rc.mode = o.mode == "depth" ? gslda::RocMode::Depth : gslda::RocMode::Threshold;
  rc.scan = {o.scale_factor, o.step};
  rc.min_neighbors = o.min_neighbors;
  rc.merge = o.merge_roc;
  gslda::write_roc_csv(o.out, gslda::roc_curve(model, test, rc));

  std::vector<gslda::ImageDetections> dets;
  gslda::ScanProfile profile;
  for (const auto& img : test.images) {
    const auto res = gslda::scan_image(model, *img.image, rc.scan);
    profile += res.profile;
    dets.push_back({img.image_id, gslda::merge_detections(res.detections, rc.min_neighbors)});
  }
  const auto m = gslda::match_detections(dets, test.truths);
  std::cout << "depth=" << model.nodes.size() << " true_positives=" << m.true_positives
            << " false_positives=" << m.false_positives << " missed=" << m.missed
            << " truths=" << test.truths.size() << " (after merging; ROC rows count "
            << (o.merge_roc ? "merged" : "raw") << " windows)";
  if (profile.windows > 0)
    std::cout << " avg_features_per_window=" << gslda::avg_features_per_window(profile);
  std::cout << "\n";
  return kOk;
}

int run_toy(const CLI::App& cmd, const Shared& shared, ToyOpts o) {
  apply_config(cmd, shared.config,
               {{"trials", setter(o.trials)}, {"rounds", setter(o.rounds)},
                {"n_pos", setter(o.n_pos)}, {"n_neg", setter(o.n_neg)},
                {"points", setter(o.points)}, {"report", setter(o.report)}});
  gslda::ToyDatasetSpec spec;
  spec.seed = shared.seed;
  spec.n_pos = o.n_pos;
  spec.n_neg = o.n_neg;
  const auto summary = gslda::run_toy(spec, o.trials, o.rounds);

  for (const auto& t : summary.trials)
    std::cout << "seed " << t.seed << ": adaboost_fp=" << t.adaboost.false_positives
              << " gslda_fp=" << t.gslda.false_positives << "\n";
  std::cout << "gslda_win_fraction=" << summary.gslda_win_fraction << "\n";

  if (!o.points.empty()) {
    const auto data = gslda::make_toy_data(spec);
    std::ofstream out(o.points);
    if (!out) throw gslda::Error(o.points + ": cannot write");
    out << "x,y,label\n";
    for (Eigen::Index i = 0; i < data.points.rows(); ++i)
      out << json_real(data.points(i, 0)) << ',' << json_real(data.points(i, 1)) << ','
          << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!o.report.empty()) {
    auto method = [](const gslda::ToyMethodReport& r) {
      json stumps = json::array();
      for (std::size_t k = 0; k < r.stumps.size(); ++k)
        stumps.push_back({{"axis", r.stumps[k].axis},
                          {"threshold", r.stumps[k].threshold},
                          {"polarity", r.stumps[k].polarity},
                          {"order", r.stumps[k].order},
                          {"coefficient", r.coefficients[k]}});
      return json{{"false_positives", r.false_positives},
                  {"detection_rate", r.detection_rate},
                  {"stumps", stumps}};
    };
    json trials = json::array();
    for (const auto& t : summary.trials)
      trials.push_back({{"seed", t.seed}, {"adaboost", method(t.adaboost)}, {"gslda", method(t.gslda)}});
    std::ofstream out(o.report);
    if (!out) throw gslda::Error(o.report + ": cannot write");
    out << json{{"trials", trials}, {"gslda_win_fraction", summary.gslda_win_fraction}}.dump(2)
        << "\n";
  }
  return kOk;
}

int run_synth(const CLI::App& cmd, const Shared& shared, SynthOpts o) {
  apply_config(cmd, shared.config,
               {{"out", setter(o.out)}, {"n_pos", setter(o.n_pos)}, {"n_neg", setter(o.n_neg)},
                {"size", setter(o.size)}, {"n_reservoir", setter(o.n_reservoir)},
                {"n_test", setter(o.n_test)}});
  gslda::SyntheticSpec spec;
  spec.seed = shared.seed;
  spec.n_pos = o.n_pos;
  spec.n_neg = o.n_neg;
  spec.size = o.size;
  spec.n_reservoir = o.n_reservoir;
  spec.n_test = o.n_test;
  gslda::write_synthetic_corpus(o.out, gslda::make_synthetic_corpus(spec));
  std::cout << (fs::path(o.out) / "manifest.json").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascaded object detector training with greedy sparse LDA"};
  app.require_subcommand(1);
  app.fallthrough();
  Shared shared;
  app.add_option("--seed", shared.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", shared.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--config", shared.config, "JSON file with option defaults");

  TrainOpts train;
  auto* t = app.add_subcommand("train", "Train a cascade from a dataset manifest");
  t->add_option("--manifest", train.manifest, "Dataset manifest JSON");
  t->add_option("--out", train.out, "Model file")->capture_default_str();
  t->add_option("--log", train.log, "Stage log (line-delimited JSON)");
  t->add_option("--method", train.method, "Node training method")
      ->check(CLI::IsMember({"adaboost", "asymboost", "gslda", "bgslda1", "bgslda2"}))
      ->capture_default_str();
  t->add_option("--dmin", train.dmin, "Per-stage minimum detection rate")->capture_default_str();
  t->add_option("--fmax", train.fmax, "Per-stage maximum false-positive rate")->capture_default_str();
  t->add_option("--f-target", train.f_target, "Overall false-positive target")->capture_default_str();
  t->add_option("--gamma", train.gamma, "Negative-class scatter weight")->capture_default_str();
  t->add_option("--asym-k", train.asym_k, "AsymBoost asymmetry k")->capture_default_str();
  t->add_option("--prune-eps", train.prune_eps, "BGSLDA pruning slack")->capture_default_str();
  t->add_flag("--dual-pass", train.dual_pass, "Backward elimination after each addition");
  t->add_option("--max-stumps", train.max_stumps, "Stump cap per node")->capture_default_str();
  t->add_option("--max-stages", train.max_stages, "Stage cap")->capture_default_str();
  t->add_option("--max-features", train.max_features, "Feature pool subsample size")
      ->capture_default_str();
  t->add_option("--feature-stride", train.feature_stride, "Feature position stride")
      ->capture_default_str();
  t->add_option("--negatives-per-stage", train.negatives_per_stage,
                "Negative pool size per stage (0 = initial size)");
  t->add_option("--validation-fraction", train.validation_fraction,
                "Held-out positive fraction for threshold tuning")
      ->capture_default_str();

  DetectOpts detect;
  auto* d = app.add_subcommand("detect", "Scan images and write detections");
  d->add_option("--model", detect.model, "Model file");
  d->add_option("inputs", detect.inputs, "PGM images or directories")->required();
  d->add_option("--out", detect.out, "Detections CSV (default stdout)");
  d->add_option("--scale-factor", detect.scale_factor, "Scale step")->capture_default_str();
  d->add_option("--step", detect.step, "Shift at base scale")->capture_default_str();
  d->add_option("--min-neighbors", detect.min_neighbors, "Minimum group size when merging")
      ->capture_default_str();
  d->add_flag("--profile", detect.profile, "Report average features per window");
  d->add_flag("--no-merge", detect.no_merge, "Emit raw windows");

  EvalOpts eval;
  auto* e = app.add_subcommand("eval", "ROC curve and match summary on a test set");
  e->add_option("--model", eval.model, "Model file");
  e->add_option("--manifest", eval.manifest, "Manifest with test images and ground truth");
  e->add_option("--mode", eval.mode, "depth or threshold")->capture_default_str();
  e->add_option("--out", eval.out, "ROC CSV")->capture_default_str();
  e->add_option("--scale-factor", eval.scale_factor, "Scale step")->capture_default_str();
  e->add_option("--step", eval.step, "Shift at base scale")->capture_default_str();
  e->add_option("--min-neighbors", eval.min_neighbors, "Minimum group size when merging")
      ->capture_default_str();
  e->add_flag("--merge-roc", eval.merge_roc, "Merge windows before counting ROC points");

  ToyOpts toy;
  auto* y = app.add_subcommand("toy", "AdaBoost vs GSLDA on the 2-D skewed toy set");
  y->add_option("--trials", toy.trials, "Number of seeds")->capture_default_str();
  y->add_option("--rounds", toy.rounds, "Weak classifiers per method")->capture_default_str();
  y->add_option("--n-pos", toy.n_pos, "Positives")->capture_default_str();
  y->add_option("--n-neg", toy.n_neg, "Negatives")->capture_default_str();
  y->add_option("--points", toy.points, "CSV of the first trial's points");
  y->add_option("--report", toy.report, "JSON report with the selected stumps");

  SynthOpts synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic face-like corpus");
  s->add_option("--out", synth.out, "Output directory")->capture_default_str();
  s->add_option("--n-pos", synth.n_pos, "Positive patches")->capture_default_str();
  s->add_option("--n-neg", synth.n_neg, "Negative patches")->capture_default_str();
  s->add_option("--size", synth.size, "Patch side")->capture_default_str();
  s->add_option("--n-reservoir", synth.n_reservoir, "Background images")->capture_default_str();
  s->add_option("--n-test", synth.n_test, "Test images with planted faces")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    gslda::set_thread_count(shared.threads);
    if (t->parsed()) return run_train(*t, shared, train);
    if (d->parsed()) return run_detect(*d, shared, detect);
    if (e->parsed()) return run_eval(*e, shared, eval);
    if (y->parsed()) return run_toy(*y, shared, toy);
    return run_synth(*s, shared, synth);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  } catch (const gslda::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kDataError;
  }
}
