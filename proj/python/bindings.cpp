#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gslda/cascade.hpp"
#include "gslda/dataset.hpp"
#include "gslda/detector.hpp"
#include "gslda/error.hpp"
#include "gslda/experiments.hpp"
#include "gslda/model_io.hpp"
#include "gslda/parallel.hpp"
#include "gslda/scatter_lda.hpp"
#include "gslda/weak_learners.hpp"

namespace py = pybind11;
using namespace gslda;

namespace {

GrayImage to_image(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw Error("image must be a 2-D uint8 array");
  GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

py::array_t<std::uint8_t> from_image(const GrayImage& img) {
  py::array_t<std::uint8_t> a({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
  return a;
}

py::dict selection(const ScatterState& s) {
  py::dict d;
  d["selected"] = s.selected;
  d["eigenvalue"] = s.eigenvalue;
  d["weights"] = Eigen::VectorXd(lda_weights(s));
  return d;
}

py::list detections(const std::vector<DetectionWindow>& ws) {
  py::list out;
  for (const auto& w : ws) out.append(py::make_tuple(w.x, w.y, w.side, w.score, w.stages_passed));
  return out;
}

CascadeModel train(const std::string& manifest_path, const std::string& method, double d_min,
                   double f_max, double f_target, std::size_t max_stumps, std::size_t max_stages,
                   std::size_t max_features, int feature_stride, std::uint64_t seed,
                   const std::function<void(py::dict)>& on_stage) {
  const auto manifest = load_manifest(manifest_path);
  const auto pool = load_training_pool(manifest);
  HaarEnumeration en;
  en.base_window = manifest.base_window;
  en.stride = feature_stride;
  const auto features = subsample_features(enumerate_haar(en), max_features, seed);
  CascadeConfig cfg;
  cfg.seed = seed;
  cfg.f_target = f_target;
  cfg.max_stages = max_stages;
  cfg.goal.d_min = d_min;
  cfg.goal.f_max = f_max;
  cfg.goal.max_stumps = max_stumps;
  cfg.node.method = train_method_from_string(method);
  cfg.bootstrap.seed = seed;
  StageCallback cb;
  if (on_stage)
    cb = [&](const StageRecord& r) {
      py::gil_scoped_acquire gil;
      py::dict d;
      d["stage"] = r.stage;
      d["stumps"] = r.stumps;
      d["d"] = r.d;
      d["f"] = r.f;
      d["D"] = r.D;
      d["F"] = r.F;
      d["goal_met"] = r.goal_met;
      on_stage(d);
    };
  return train_cascade(pool, features, manifest.base_window, cfg, cb).model;
}

}  // namespace

PYBIND11_MODULE(_gslda, m) {
  m.doc() = "Cascaded object detectors trained with greedy sparse LDA and boosting";
  py::register_exception<Error>(m, "GsldaError", PyExc_ValueError);

  m.def("set_thread_count", &set_thread_count, py::arg("n"));

  m.def(
      "forward_select",
      [](const Eigen::MatrixXd& responses, const Eigen::VectorXd& labels, Index max_features,
         double gamma, double ridge, bool dual_pass) {
        ScatterConfig cfg;
        cfg.max_features = max_features;
        cfg.gamma = gamma;
        cfg.ridge = ridge;
        cfg.dual_pass = dual_pass;
        return selection(forward_select(ResponseMatrix(responses, labels), cfg));
      },
      py::arg("responses"), py::arg("labels"), py::arg("max_features") = 10, py::arg("gamma") = 1.0,
      py::arg("ridge") = 1e-6, py::arg("dual_pass") = false);

  m.def(
      "train_stump",
      [](const std::vector<double>& values, const std::vector<double>& labels,
         std::optional<Eigen::VectorXd> weights) {
        const SampleWeights w =
            weights ? SampleWeights(*weights) : SampleWeights::uniform(values.size());
        const StumpFit fit = train_stump(values, labels, w);
        return py::make_tuple(fit.stump.threshold, fit.stump.polarity, fit.error);
      },
      py::arg("values"), py::arg("labels"), py::arg("weights") = py::none(),
      "Returns (threshold, polarity, weighted_error).");

  m.def(
      "haar_value",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image,
         const std::string& kind, int x, int y, int w, int h, int base_window, int offset_x,
         int offset_y, double scale) {
        const IntegralImage ii(to_image(image));
        const HaarFeature f{haar_kind_from_string(kind), x, y, w, h, base_window};
        if (!f.valid()) throw Error("invalid Haar feature");
        return eval_haar(f, ii, offset_x, offset_y, scale);
      },
      py::arg("image"), py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"),
      py::arg("base_window"), py::arg("offset_x") = 0, py::arg("offset_y") = 0,
      py::arg("scale") = 1.0);

  py::class_<CascadeModel>(m, "CascadeModel")
      .def_readonly("base_window", &CascadeModel::base_window)
      .def_readonly("f_target", &CascadeModel::f_target)
      .def_property_readonly("n_nodes", [](const CascadeModel& c) { return c.nodes.size(); })
      .def_property_readonly("n_features", [](const CascadeModel& c) { return c.features.size(); })
      .def_property_readonly("stumps_per_node",
                             [](const CascadeModel& c) {
                               std::vector<std::size_t> out;
                               for (const auto& n : c.nodes) out.push_back(n.stumps.size());
                               return out;
                             })
      .def_property_readonly("stage_rates",
                             [](const CascadeModel& c) {
                               py::list out;
                               for (const auto& r : c.stage_rates) out.append(py::make_tuple(r.d, r.f, r.D, r.F));
                               return out;
                             })
      .def_property_readonly("method", [](const CascadeModel& c) { return c.training.method; })
      .def("to_json", &model_to_json);

  m.def("model_from_json", &model_from_json, py::arg("text"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("save_model", &save_model, py::arg("path"), py::arg("model"));

  m.def("train", &train, py::arg("manifest"), py::arg("method") = "gslda", py::arg("d_min") = 0.995,
        py::arg("f_max") = 0.5, py::arg("f_target") = 1e-3, py::arg("max_stumps") = 200,
        py::arg("max_stages") = 30, py::arg("max_features") = 4000, py::arg("feature_stride") = 1,
        py::arg("seed") = 0, py::arg("on_stage") = nullptr,
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "detect",
      [](const CascadeModel& model,
         py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image,
         double scale_factor, int step, bool merge, std::size_t min_neighbors) {
        const IntegralImage ii(to_image(image));
        ScanResult r;
        {
          py::gil_scoped_release release;
          r = scan_image(model, ii, ScanParams{scale_factor, step});
        }
        auto ws = merge ? merge_detections(r.detections, min_neighbors) : r.detections;
        const double avg = r.profile.windows ? avg_features_per_window(r.profile) : 0.0;
        return py::make_tuple(detections(ws), avg);
      },
      py::arg("model"), py::arg("image"), py::arg("scale_factor") = 1.2, py::arg("step") = 1,
      py::arg("merge") = true, py::arg("min_neighbors") = 2,
      "Returns ([(x, y, side, score, stages_passed)], avg_features_per_window).");

  m.def(
      "run_toy",
      [](std::size_t trials, std::size_t rounds, std::uint64_t seed) {
        ToyDatasetSpec spec;
        spec.seed = seed;
        const ToySummary s = run_toy(spec, trials, rounds);
        py::list rows;
        for (const auto& t : s.trials)
          rows.append(py::make_tuple(t.seed, t.adaboost.false_positives, t.gslda.false_positives));
        py::dict d;
        d["trials"] = rows;
        d["gslda_win_fraction"] = s.gslda_win_fraction;
        return d;
      },
      py::arg("trials") = 20, py::arg("rounds") = 4, py::arg("seed") = 0);

  m.def(
      "write_synthetic_corpus",
      [](const std::filesystem::path& dir, std::uint64_t seed, int size, std::size_t n_pos,
         std::size_t n_neg, std::size_t n_reservoir, std::size_t n_test) {
        SyntheticSpec spec;
        spec.seed = seed;
        spec.size = size;
        spec.n_pos = n_pos;
        spec.n_neg = n_neg;
        spec.n_reservoir = n_reservoir;
        spec.n_test = n_test;
        write_synthetic_corpus(dir, make_synthetic_corpus(spec));
        return dir / "manifest.json";
      },
      py::arg("dir"), py::arg("seed") = 1, py::arg("size") = 16, py::arg("n_pos") = 1000,
      py::arg("n_neg") = 1000, py::arg("n_reservoir") = 150, py::arg("n_test") = 10,
      "Writes the corpus and returns the manifest path.");

  m.def(
      "draw_face",
      [](int side, std::uint64_t seed) {
        GrayImage img(side, side, 128);
        Rng rng(seed);
        draw_face(img, 0, 0, side, rng);
        return from_image(img);
      },
      py::arg("side"), py::arg("seed") = 0);
}
