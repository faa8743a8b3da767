#include "gslda/model_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gslda/error.hpp"

namespace gslda {

using nlohmann::json;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s.empty()) throw Error("empty real");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw Error("malformed real '" + s + "'");
  return v;
}

namespace {

json reals(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(format_real(x));
  return a;
}

// Field access that reports the path of whatever is missing or mistyped.
class Field {
 public:
  Field(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  Field operator[](const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) throw Error("schema error: missing field '" + join(key) + "'");
    return {*it, join(key)};
  }
  Field operator[](std::size_t i) const { return {j_->at(i), path_ + "[" + std::to_string(i) + "]"}; }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }
  double real() const {
    if (!j_->is_string()) fail("expected a hex-float string");
    try {
      return parse_real(j_->get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  long long integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<long long>();
  }
  std::size_t count() const {
    const long long v = integer();
    if (v < 0) fail("expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }
  std::uint64_t u64() const {
    if (!j_->is_number_unsigned()) fail("expected a nonnegative integer");
    return j_->get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected a boolean");
    return j_->get<bool>();
  }
  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("schema error: field '" + path_ + "': " + what);
  }

 private:
  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  const json* j_;
  std::string path_;
};

}  // namespace

std::string model_to_json(const CascadeModel& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["base_window"] = model.base_window;
  j["f_target"] = format_real(model.f_target);

  json feats = json::array();
  for (const auto& f : model.features)
    feats.push_back({{"kind", std::string(to_string(f.kind))},
                     {"x", f.x},
                     {"y", f.y},
                     {"w", f.w},
                     {"h", f.h}});
  j["features"] = feats;

  json nodes = json::array();
  for (const auto& n : model.nodes) {
    json stumps = json::array();
    for (const auto& s : n.stumps)
      stumps.push_back({{"feature_id", s.feature_id},
                        {"threshold", format_real(s.threshold)},
                        {"polarity", s.polarity}});
    nodes.push_back({{"stumps", stumps},
                     {"coefficients", reals(n.coefficients)},
                     {"threshold", format_real(n.threshold)},
                     {"trained_by", std::string(to_string(n.trained_by))},
                     {"goal_met", n.goal_met}});
  }
  j["nodes"] = nodes;

  json rates = json::array();
  for (const auto& r : model.stage_rates)
    rates.push_back({{"d", format_real(r.d)},
                     {"f", format_real(r.f)},
                     {"D", format_real(r.D)},
                     {"F", format_real(r.F)}});
  j["stage_rates"] = rates;

  const auto& t = model.training;
  j["training"] = {{"method", t.method},
                   {"d_min", format_real(t.d_min)},
                   {"f_max", format_real(t.f_max)},
                   {"f_target", format_real(t.f_target)},
                   {"seed", t.seed},
                   {"gamma", format_real(t.gamma)},
                   {"asym_k", format_real(t.asym_k)},
                   {"prune_epsilon", format_real(t.prune_epsilon)},
                   {"dual_pass", t.dual_pass},
                   {"max_stumps", t.max_stumps}};
  return j.dump(2) + "\n";
}

CascadeModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("schema error: not valid JSON: ") + e.what());
  }
  const Field root(j, "");
  const long long version = root["format_version"].integer();
  if (version != kModelFormatVersion)
    throw Error("unknown version: model format_version " + std::to_string(version));

  CascadeModel m;
  m.base_window = static_cast<int>(root["base_window"].integer());
  if (m.base_window < 1) root["base_window"].fail("must be positive");
  m.f_target = root["f_target"].real();

  const Field feats = root["features"];
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const Field f = feats[i];
    HaarFeature h;
    try {
      h.kind = haar_kind_from_string(f["kind"].string());
    } catch (const Error& e) {
      f["kind"].fail(e.what());
    }
    h.x = static_cast<int>(f["x"].integer());
    h.y = static_cast<int>(f["y"].integer());
    h.w = static_cast<int>(f["w"].integer());
    h.h = static_cast<int>(f["h"].integer());
    h.base_window = m.base_window;
    if (!h.valid()) f.fail("invalid feature geometry");
    m.features.push_back(h);
  }

  const Field nodes = root["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Field n = nodes[i];
    NodeClassifier node;
    const Field stumps = n["stumps"];
    for (std::size_t k = 0; k < stumps.size(); ++k) {
      const Field s = stumps[k];
      DecisionStump st;
      st.feature_id = s["feature_id"].count();
      if (st.feature_id >= m.features.size()) s["feature_id"].fail("out of range");
      st.threshold = s["threshold"].real();
      st.polarity = static_cast<int>(s["polarity"].integer());
      if (st.polarity != 1 && st.polarity != -1) s["polarity"].fail("must be +1 or -1");
      node.stumps.push_back(st);
    }
    const Field coefs = n["coefficients"];
    if (coefs.size() != node.stumps.size()) coefs.fail("length differs from stumps");
    for (std::size_t k = 0; k < coefs.size(); ++k) node.coefficients.push_back(coefs[k].real());
    node.threshold = n["threshold"].real();
    try {
      node.trained_by = train_method_from_string(n["trained_by"].string());
    } catch (const Error& e) {
      n["trained_by"].fail(e.what());
    }
    node.goal_met = n["goal_met"].boolean();
    m.nodes.push_back(std::move(node));
  }

  const Field rates = root["stage_rates"];
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const Field r = rates[i];
    m.stage_rates.push_back({r["d"].real(), r["f"].real(), r["D"].real(), r["F"].real()});
  }

  const Field t = root["training"];
  m.training.method = t["method"].string();
  m.training.d_min = t["d_min"].real();
  m.training.f_max = t["f_max"].real();
  m.training.f_target = t["f_target"].real();
  m.training.seed = t["seed"].u64();
  m.training.gamma = t["gamma"].real();
  m.training.asym_k = t["asym_k"].real();
  m.training.prune_epsilon = t["prune_epsilon"].real();
  m.training.dual_pass = t["dual_pass"].boolean();
  m.training.max_stumps = t["max_stumps"].count();
  return m;
}

void save_model(const std::filesystem::path& path, const CascadeModel& model) {
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write model");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

CascadeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open model");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace gslda
