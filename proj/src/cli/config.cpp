#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fhl/cli.hpp"

namespace fhl::cli {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& d : v) s += (s.empty() ? "" : "; ") + d;
  return s;
}

// Collects every problem instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed,
              std::initializer_list<const char*> required = {}) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
      if (!ok.count(k)) error(path + "/" + k, "unknown key");
    }
    for (const char* r : required) {
      if (!j.contains(r)) error(path + "/" + r, "required key missing");
    }
    return true;
  }

  std::optional<double> number(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    const json& v = j.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      error(path + "/" + key, "expected a finite number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  double number_or(const json& j, const char* key, const std::string& path, double def) {
    return number(j, key, path).value_or(def);
  }

  std::optional<std::uint64_t> count(const json& j, const char* key, const std::string& path,
                                     std::uint64_t min = 1) {
    if (!j.contains(key)) return std::nullopt;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      error(path + "/" + key, "expected a non-negative integer");
      return std::nullopt;
    }
    const std::uint64_t u = v.get<std::uint64_t>();
    if (u < min) {
      error(path + "/" + key, "must be at least " + std::to_string(min));
      return std::nullopt;
    }
    return u;
  }

  std::optional<bool> boolean(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_boolean()) {
      error(path + "/" + key, "expected true or false");
      return std::nullopt;
    }
    return j.at(key).get<bool>();
  }

  std::optional<std::string> string(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_string()) {
      error(path + "/" + key, "expected a string");
      return std::nullopt;
    }
    return j.at(key).get<std::string>();
  }

  std::optional<VectorXd> vector(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    return as_vector(j.at(key), path + "/" + key);
  }

  std::optional<VectorXd> as_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) {
      error(path, "expected a non-empty array of numbers");
      return std::nullopt;
    }
    VectorXd out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        error(path + "/" + std::to_string(i), "expected a finite number");
        return std::nullopt;
      }
      out(static_cast<Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  std::optional<MatrixXd> matrix(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    const json& v = j.at(key);
    const std::string p = path + "/" + key;
    if (!v.is_array() || v.empty()) {
      error(p, "expected a non-empty array of rows");
      return std::nullopt;
    }
    std::vector<VectorXd> rows;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto r = as_vector(v[i], p + "/" + std::to_string(i));
      if (!r) return std::nullopt;
      rows.push_back(*r);
    }
    MatrixXd m(static_cast<Index>(rows.size()), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols()) {
        error(p, "rows have different lengths");
        return std::nullopt;
      }
      m.row(static_cast<Index>(i)) = rows[i].transpose();
    }
    return m;
  }

  // Runs a library constructor and turns its error into a diagnostic.
  template <class F>
  auto guarded(const std::string& path, F&& f) -> std::optional<decltype(f())> {
    try {
      return f();
    } catch (const Error& e) {
      error(path, e.what());
      return std::nullopt;
    }
  }
};

std::optional<DriftSpec> read_drift(Reader& r, const json& j, std::size_t d) {
  const std::string path = "/model/drift";
  if (!r.object(j, path, {"family", "A", "c", "rho", "K", "L"}, {"family"})) return std::nullopt;
  const auto family = r.string(j, "family", path);
  const auto K = r.number(j, "K", path);
  const auto L = r.number(j, "L", path);
  if (!family) return std::nullopt;
  if (*family == "linear" || *family == "sinusoidal") {
    if (j.contains("rho")) r.error(path + "/rho", "only used by clipped_cubic");
    auto A = r.matrix(j, "A", path);
    if (!A) {
      if (!j.contains("A")) r.error(path + "/A", "required for this family");
      return std::nullopt;
    }
    if (static_cast<std::size_t>(A->rows()) != d || A->cols() != A->rows()) {
      r.error(path + "/A", "must be a " + std::to_string(d) + " x " + std::to_string(d) + " matrix");
      return std::nullopt;
    }
    VectorXd c = r.vector(j, "c", path).value_or(VectorXd::Zero(static_cast<Index>(d)));
    if (static_cast<std::size_t>(c.size()) != d) {
      r.error(path + "/c", "must have length " + std::to_string(d));
      return std::nullopt;
    }
    return r.guarded(path, [&] {
      return *family == "linear" ? DriftSpec::linear(*A, c, K, L) : DriftSpec::sinusoidal(*A, c, K, L);
    });
  }
  if (*family == "clipped_cubic") {
    if (j.contains("A") || j.contains("c")) r.error(path, "clipped_cubic takes only rho, K and L");
    const auto rho = r.number(j, "rho", path);
    if (!rho) {
      if (!j.contains("rho")) r.error(path + "/rho", "required for clipped_cubic");
      return std::nullopt;
    }
    return r.guarded(path, [&] { return DriftSpec::clipped_cubic(d, *rho, K, L); });
  }
  r.error(path + "/family", "expected linear, sinusoidal or clipped_cubic");
  return std::nullopt;
}

std::optional<SigmaSpec> read_sigma(Reader& r, const json* jp, std::size_t d, double T) {
  const std::string path = "/model/sigma";
  if (!jp) return r.guarded(path, [&] { return SigmaSpec::identity(d, T); });
  const json& j = *jp;
  if (!r.object(j, path, {"value", "entries", "alpha0", "Kbar"})) return std::nullopt;
  const double alpha0 = r.number_or(j, "alpha0", path, 1.0);
  const auto Kbar = r.number(j, "Kbar", path);
  if (j.contains("value") == j.contains("entries")) {
    r.error(path, "give exactly one of value or entries");
    return std::nullopt;
  }
  std::vector<SigmaEntry> entries;
  if (j.contains("value")) {
    const auto v = r.number(j, "value", path);
    if (!v) return std::nullopt;
    entries.assign(d, SigmaEntry{SigmaEntry::Kind::kConstant, *v, 0.0, 0.0});
  } else {
    const json& e = j.at("entries");
    if (!e.is_array() || e.size() != d) {
      r.error(path + "/entries", "expected an array of " + std::to_string(d) + " entries");
      return std::nullopt;
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string p = path + "/entries/" + std::to_string(i);
      if (!r.object(e[i], p, {"kind", "a", "b", "omega"}, {"kind"})) return std::nullopt;
      const auto kind = r.string(e[i], "kind", p);
      SigmaEntry s;
      s.a = r.number_or(e[i], "a", p, 1.0);
      s.b = r.number_or(e[i], "b", p, 0.0);
      s.omega = r.number_or(e[i], "omega", p, 0.0);
      if (!kind) return std::nullopt;
      if (*kind == "constant") {
        s.kind = SigmaEntry::Kind::kConstant;
        if (e[i].contains("b") || e[i].contains("omega")) r.error(p, "constant entries take only a");
      } else if (*kind == "affine") {
        s.kind = SigmaEntry::Kind::kAffine;
        if (e[i].contains("omega")) r.error(p + "/omega", "only used by sinusoidal entries");
      } else if (*kind == "sinusoidal") {
        s.kind = SigmaEntry::Kind::kSinusoidal;
      } else {
        r.error(p + "/kind", "expected constant, affine or sinusoidal");
        return std::nullopt;
      }
      entries.push_back(s);
    }
  }
  return r.guarded(path, [&] { return SigmaSpec(entries, T, alpha0, Kbar); });
}

std::optional<TestFunction> read_test_function(Reader& r, const json& j, const std::string& path) {
  if (!r.object(j, path, {"family", "c", "a", "center", "s", "w", "lo", "hi"}, {"family"})) return std::nullopt;
  const auto family = r.string(j, "family", path);
  if (!family) return std::nullopt;
  auto need = [&](const char* key) {
    if (!j.contains(key)) r.error(path + "/" + key, "required for family " + *family);
  };
  auto only = [&](std::initializer_list<const char*> keys) {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
      if (k != "family" && !ok.count(k)) r.error(path + "/" + k, "not used by family " + *family);
  };
  if (*family == "constant") {
    only({"c"});
    need("c");
    const auto c = r.number(j, "c", path);
    if (!c) return std::nullopt;
    return r.guarded(path, [&] { return TestFunction::constant(*c); });
  }
  if (*family == "bump") {
    only({"a", "center", "s"});
    need("a");
    need("center");
    need("s");
    const auto a = r.number(j, "a", path);
    const auto s = r.number(j, "s", path);
    const auto z0 = r.vector(j, "center", path);
    if (!a || !s || !z0) return std::nullopt;
    return r.guarded(path, [&] { return TestFunction::bump(*a, *z0, *s); });
  }
  if (*family == "clipped_exp") {
    only({"w", "lo", "hi"});
    need("w");
    need("lo");
    need("hi");
    const auto w = r.vector(j, "w", path);
    const auto lo = r.number(j, "lo", path);
    const auto hi = r.number(j, "hi", path);
    if (!w || !lo || !hi) return std::nullopt;
    return r.guarded(path, [&] { return TestFunction::clipped_exp(*w, *lo, *hi); });
  }
  r.error(path + "/family", "expected constant, bump or clipped_exp");
  return std::nullopt;
}

std::vector<double> read_list(Reader& r, const json& j, const char* key, const std::string& path,
                              std::vector<double> def) {
  if (!j.contains(key)) return def;
  const auto v = r.vector(j, key, path);
  if (!v) return def;
  return {v->data(), v->data() + v->size()};
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : Error("invalid config: " + join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"energy",        "martingale",         "entropy", "log-harnack",
                                              "power-harnack", "change-of-measure", "feller"};
  return names;
}

TimeGrid ExperimentConfig::grid() const {
  return TimeGrid::uniform_refined(coupling.n, model.T, coupling.refine_levels, coupling.refine_ratio);
}

TimeGrid ExperimentConfig::plain_grid() const { return TimeGrid::uniform(coupling.n, model.T); }

ExperimentConfig parse_config(const json& j) {
  Reader r;
  if (!r.object(j, "", {"model", "coupling", "run", "invariant", "output"}, {"model"})) throw ConfigError(r.errors);
  if (!j.contains("model")) throw ConfigError(r.errors);

  // model
  const json& jm = j.at("model");
  if (!r.object(jm, "/model", {"H", "T", "d", "drift", "sigma"}, {"H", "T", "d", "drift"}) ||
      !jm.contains("H") || !jm.contains("T") || !jm.contains("d") || !jm.contains("drift")) {
    throw ConfigError(r.errors);
  }
  const auto H = r.number(jm, "H", "/model");
  const auto T = r.number(jm, "T", "/model");
  const auto d = r.count(jm, "d", "/model");
  if (!H || !T || !d) throw ConfigError(r.errors);
  if (!(*T > 0.0)) {
    r.error("/model/T", "must be positive");
    throw ConfigError(r.errors);
  }
  auto drift = read_drift(r, jm.at("drift"), *d);
  auto sigma = read_sigma(r, jm.contains("sigma") ? &jm.at("sigma") : nullptr, *d, *T);
  std::optional<ModelSpec> model;
  if (drift && sigma) model = r.guarded("/model", [&] { return ModelSpec(*H, *T, *drift, *sigma); });

  // coupling
  CouplingBlock cb;
  if (j.contains("coupling")) {
    const json& jc = j.at("coupling");
    if (r.object(jc, "/coupling", {"theta0", "n", "refine_levels", "refine_ratio"})) {
      cb.theta0 = r.number_or(jc, "theta0", "/coupling", cb.theta0);
      cb.n = r.count(jc, "n", "/coupling", 3).value_or(cb.n);
      cb.refine_levels = r.count(jc, "refine_levels", "/coupling", 0).value_or(cb.refine_levels);
      cb.refine_ratio = r.number_or(jc, "refine_ratio", "/coupling", cb.refine_ratio);
      if (!(cb.theta0 > 0.0 && cb.theta0 < 2.0)) r.error("/coupling/theta0", "must lie in (0, 2)");
      if (!(cb.refine_ratio > 0.0 && cb.refine_ratio < 1.0)) r.error("/coupling/refine_ratio", "must lie in (0, 1)");
    }
  }

  // run
  RunBlock rb;
  const VectorXd zero = VectorXd::Zero(static_cast<Index>(*d));
  rb.x = zero;
  rb.y = zero;
  if (j.contains("run")) {
    const json& jr = j.at("run");
    if (r.object(jr, "/run",
                 {"n_paths", "seed", "checks", "x", "y", "p", "test_functions", "probe_times", "feller_radii",
                  "energy_paths", "tau", "gap_tol", "route"})) {
      rb.n_paths = r.count(jr, "n_paths", "/run", 2).value_or(rb.n_paths);
      rb.seed = r.count(jr, "seed", "/run", 0).value_or(rb.seed);
      rb.p = r.number_or(jr, "p", "/run", rb.p);
      if (!(rb.p > 1.0)) r.error("/run/p", "must exceed 1");
      rb.energy_paths = r.count(jr, "energy_paths", "/run").value_or(rb.energy_paths);
      rb.tau = r.number_or(jr, "tau", "/run", rb.tau);
      rb.gap_tol = r.number_or(jr, "gap_tol", "/run", rb.gap_tol);
      for (const char* key : {"x", "y"}) {
        if (auto v = r.vector(jr, key, "/run")) {
          if (static_cast<std::size_t>(v->size()) != *d)
            r.error(std::string("/run/") + key, "must have length " + std::to_string(*d));
          else
            (key[0] == 'x' ? rb.x : rb.y) = *v;
        }
      }
      if (jr.contains("checks")) {
        const json& c = jr.at("checks");
        if (!c.is_array()) {
          r.error("/run/checks", "expected an array of check names");
        } else {
          for (std::size_t i = 0; i < c.size(); ++i) {
            const auto& names = known_checks();
            if (!c[i].is_string() || std::find(names.begin(), names.end(), c[i].get<std::string>()) == names.end()) {
              r.error("/run/checks/" + std::to_string(i), "unknown check");
            } else {
              rb.checks.push_back(c[i].get<std::string>());
            }
          }
        }
      }
      if (jr.contains("test_functions")) {
        const json& tf = jr.at("test_functions");
        if (!tf.is_array()) {
          r.error("/run/test_functions", "expected an array");
        } else {
          for (std::size_t i = 0; i < tf.size(); ++i) {
            if (auto f = read_test_function(r, tf[i], "/run/test_functions/" + std::to_string(i))) {
              if (f->dim() != 0 && f->dim() != *d)
                r.error("/run/test_functions/" + std::to_string(i), "dimension differs from the model");
              else
                rb.test_functions.push_back(*f);
            }
          }
        }
      }
      rb.probe_times = read_list(r, jr, "probe_times", "/run", {});
      for (double t : rb.probe_times)
        if (!(t >= 0.0 && t <= 1.0)) r.error("/run/probe_times", "entries are fractions of T in [0, 1]");
      rb.feller_radii = read_list(r, jr, "feller_radii", "/run", {});
      for (double v : rb.feller_radii)
        if (!(v >= 0.0)) r.error("/run/feller_radii", "entries must be non-negative");
      if (auto route = r.string(jr, "route", "/run")) {
        if (*route == "direct")
          rb.route = NoiseRoute::kDirect;
        else if (*route == "volterra")
          rb.route = NoiseRoute::kVolterra;
        else
          r.error("/run/route", "expected direct or volterra");
      }
    }
  }
  if (rb.checks.empty()) rb.checks = known_checks();
  if (rb.probe_times.empty()) rb.probe_times = {0.25, 0.5, 0.75, 1.0};
  if (rb.feller_radii.empty()) rb.feller_radii = {0.4, 0.2, 0.1, 0.05};
  if (rb.test_functions.empty()) rb.test_functions.push_back(TestFunction::bump(0.1, zero, 1.0));

  // invariant
  InvariantBlock ib;
  ib.x0 = zero;
  if (j.contains("invariant")) {
    const json& ji = j.at("invariant");
    if (r.object(ji, "/invariant",
                 {"x0", "n_steps", "n_chains", "bootstrap", "tilts", "w2_samples", "mc_samples", "entropy_cost"})) {
      if (auto v = r.vector(ji, "x0", "/invariant")) {
        if (static_cast<std::size_t>(v->size()) != *d)
          r.error("/invariant/x0", "must have length " + std::to_string(*d));
        else
          ib.x0 = *v;
      }
      ib.n_steps = r.count(ji, "n_steps", "/invariant").value_or(ib.n_steps);
      ib.n_chains = r.count(ji, "n_chains", "/invariant").value_or(ib.n_chains);
      ib.bootstrap = r.count(ji, "bootstrap", "/invariant").value_or(ib.bootstrap);
      ib.w2_samples = r.count(ji, "w2_samples", "/invariant", 2).value_or(ib.w2_samples);
      ib.mc_samples = r.count(ji, "mc_samples", "/invariant", 2).value_or(ib.mc_samples);
      ib.entropy_cost = r.boolean(ji, "entropy_cost", "/invariant").value_or(ib.entropy_cost);
      ib.tilts = read_list(r, ji, "tilts", "/invariant", {});
    }
  }
  if (ib.tilts.empty()) ib.tilts = {0.5, 1.0, 2.0};

  // output
  OutputBlock ob;
  if (j.contains("output")) {
    const json& jo = j.at("output");
    if (r.object(jo, "/output", {"dir", "csv"})) {
      ob.dir = r.string(jo, "dir", "/output").value_or("");
      ob.csv = r.boolean(jo, "csv", "/output").value_or(true);
    }
  }

  if (!r.errors.empty() || !model) {
    if (r.errors.empty()) r.error("/model", "invalid model");
    throw ConfigError(r.errors);
  }
  return {*model, cb, rb, ib, ob, j};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open file"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return parse_config(j);
}

}  // namespace fhl::cli
