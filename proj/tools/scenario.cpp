#include "scenario.hpp"

#include "rfield/domination.hpp"
#include "rfield/harness.hpp"
#include "rfield/weights.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace rfield::cli {

namespace {

const std::vector<std::pair<Command, std::string>>& command_table() {
  static const std::vector<std::pair<Command, std::string>> t = {
      {Command::decompose, "decompose"}, {Command::rosenthal, "rosenthal"}, {Command::tailbound, "tailbound"},
      {Command::h2q, "h2q"},             {Command::series, "series"},       {Command::slln, "slln"},
      {Command::wlln, "wlln"},           {Command::lp, "lp"},               {Command::varying, "varying"},
      {Command::dominate, "dominate"},   {Command::moment_series, "moment-series"},
  };
  return t;
}

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

/// Collects violations while walking a JSON document.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  /// Runs a library validator and records its message under path.
  void check(const std::string& path, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected a table");
    return false;
  }

  void known_keys(const json& j, const std::string& path, const std::set<std::string>& keys) {
    if (!j.is_object()) return;
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) fail(join_path(path, k), "unknown key");
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      fail(join_path(path, key), "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  double number_or(const json& obj, const std::string& key, const std::string& path, double dflt) {
    return number(obj, key, path).value_or(dflt);
  }

  std::optional<long long> integer(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    fail(join_path(path, key), "expected an integer");
    return std::nullopt;
  }

  long long integer_or(const json& obj, const std::string& key, const std::string& path, long long dflt) {
    return integer(obj, key, path).value_or(dflt);
  }

  std::optional<std::string> string(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_string()) {
      fail(join_path(path, key), "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& obj, const std::string& key, const std::string& path) {
    std::vector<double> out;
    if (!obj.contains(key)) return out;
    const auto& v = obj.at(key);
    if (!v.is_array()) {
      fail(join_path(path, key), "expected an array of numbers");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(join_path(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        continue;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<int> integers(const json& obj, const std::string& key, const std::string& path) {
    std::vector<int> out;
    for (double d : numbers(obj, key, path)) {
      if (d != std::floor(d) || std::abs(d) > 1e9) {
        fail(join_path(path, key), "expected integers");
        return {};
      }
      out.push_back(static_cast<int>(d));
    }
    return out;
  }
};

std::uint64_t parse_seed(Reader& r, const json& doc) {
  if (!doc.contains("seed")) return 0;
  const auto& v = doc.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto s = v.get<long long>();
    if (s >= 0) return static_cast<std::uint64_t>(s);
  }
  if (v.is_string()) {
    try {
      std::size_t pos = 0;
      const auto s = v.get<std::string>();
      const auto out = std::stoull(s, &pos, 0);
      if (pos == s.size()) return out;
    } catch (const std::exception&) {
    }
  }
  r.fail("seed", "expected a nonnegative 64-bit integer (or a decimal/hex string)");
  return 0;
}

MarginalSpec parse_marginal(Reader& r, const json& j, const std::string& path) {
  MarginalSpec out;
  if (j.is_string()) {
    // Shorthand for parameter-free kinds.
    const auto k = j.get<std::string>();
    if (k == "rademacher") return out;
    r.fail(join_path(path, "kind"), "unknown marginal kind '" + k + "' (only rademacher may be given as a bare string)");
    return out;
  }
  if (!r.object(j, path)) return out;
  r.known_keys(j, path, {"kind", "prob", "beta", "rate", "values", "probs", "value", "knots", "tails", "shift", "scale"});
  const auto kind = r.string(j, "kind", path);
  if (!kind) {
    if (!j.contains("kind")) r.fail(join_path(path, "kind"), "missing");
    return out;
  }
  auto need = [&](const std::string& key) -> double {
    const auto v = r.number(j, key, path);
    if (!v) {
      if (!j.contains(key)) r.fail(join_path(path, key), "missing (required for kind '" + *kind + "')");
      return 0.0;
    }
    return *v;
  };
  if (*kind == "rademacher")
    out = MarginalSpec::rademacher();
  else if (*kind == "bernoulli")
    out = MarginalSpec::bernoulli(need("prob"));
  else if (*kind == "centered_bernoulli")
    out = MarginalSpec::centered_bernoulli(need("prob"));
  else if (*kind == "pareto")
    out = MarginalSpec::pareto(need("beta"));
  else if (*kind == "symmetrized_pareto")
    out = MarginalSpec::symmetrized_pareto(need("beta"));
  else if (*kind == "exponential")
    out = MarginalSpec::exponential(need("rate"));
  else if (*kind == "constant")
    out = MarginalSpec::constant(need("value"));
  else if (*kind == "discrete")
    out = MarginalSpec::discrete(r.numbers(j, "values", path), r.numbers(j, "probs", path));
  else if (*kind == "tabulated")
    out = MarginalSpec::tabulated(r.numbers(j, "knots", path), r.numbers(j, "tails", path));
  else {
    r.fail(join_path(path, "kind"),
           "unknown marginal kind '" + *kind +
               "' (expected rademacher, bernoulli, centered_bernoulli, pareto, symmetrized_pareto, exponential, constant, discrete, tabulated)");
    return out;
  }
  out.shift = r.number_or(j, "shift", path, 0.0);
  out.scale = r.number_or(j, "scale", path, 1.0);
  r.check(path, [&] { out.validate(); });
  return out;
}

DependenceSpec parse_dependence(Reader& r, const json& j, const std::string& path) {
  DependenceSpec out;
  if (j.is_string()) {
    if (j.get<std::string>() == "iid") return out;
    r.fail(join_path(path, "kind"), "unknown dependence '" + j.get<std::string>() + "' (only iid may be given as a bare string)");
    return out;
  }
  if (!r.object(j, path)) return out;
  r.known_keys(j, path, {"kind", "generators", "correlation", "radius", "window"});
  const auto kind = r.string(j, "kind", path).value_or("iid");
  if (kind == "iid")
    out = DependenceSpec::iid();
  else if (kind == "pairwise_walsh")
    out = DependenceSpec::pairwise_walsh(static_cast<int>(r.integer_or(j, "generators", path, 2)));
  else if (kind == "gaussian_copula_negative")
    out = DependenceSpec::gaussian_copula_negative(r.number_or(j, "correlation", path, 0.0),
                                                   static_cast<int>(r.integer_or(j, "radius", path, 1)));
  else if (kind == "moving_average")
    out = DependenceSpec::moving_average(static_cast<int>(r.integer_or(j, "window", path, 2)));
  else {
    r.fail(join_path(path, "kind"),
           "unknown dependence kind '" + kind + "' (expected iid, pairwise_walsh, gaussian_copula_negative, moving_average)");
    return out;
  }
  r.check(path, [&] { out.validate(); });
  return out;
}

SlowlyVaryingFamily parse_family(Reader& r, const json& j, const std::string& path) {
  SlowlyVaryingFamily out;
  if (!r.object(j, path)) return out;
  r.known_keys(j, path, {"kind", "value", "gamma", "nu"});
  const auto kind = r.string(j, "kind", path).value_or("constant");
  if (kind == "constant")
    out = SlowlyVaryingFamily::constant(r.number_or(j, "value", path, 1.0));
  else if (kind == "log_power")
    out = SlowlyVaryingFamily::log_power(r.number_or(j, "gamma", path, 1.0));
  else if (kind == "loglog_power")
    out = SlowlyVaryingFamily::loglog_power(r.number_or(j, "gamma", path, 1.0));
  else if (kind == "log_nu")
    out = SlowlyVaryingFamily::iterated_log_product(static_cast<int>(r.integer_or(j, "nu", path, 1)));
  else if (kind == "log_nu_sq")
    out = SlowlyVaryingFamily::iterated_log_product_sq(static_cast<int>(r.integer_or(j, "nu", path, 1)));
  else {
    r.fail(join_path(path, "kind"), "unknown family '" + kind + "' (expected constant, log_power, loglog_power, log_nu, log_nu_sq)");
    return out;
  }
  r.check(path, [&] { out.validate(); });
  return out;
}

MonotoneTransform parse_transform(Reader& r, const json& j, const std::string& path) {
  MonotoneTransform out;
  if (!r.object(j, path)) return out;
  r.known_keys(j, path, {"kind", "slope", "intercept", "lo", "hi", "threshold", "below", "above"});
  const auto kind = r.string(j, "kind", path).value_or("identity");
  if (kind == "identity")
    out = MonotoneTransform::identity();
  else if (kind == "affine")
    out = MonotoneTransform::affine(r.number_or(j, "slope", path, 1.0), r.number_or(j, "intercept", path, 0.0));
  else if (kind == "clamp")
    out = MonotoneTransform::clamp(r.number_or(j, "lo", path, -1.0), r.number_or(j, "hi", path, 1.0));
  else if (kind == "step")
    out = MonotoneTransform::step(r.number_or(j, "threshold", path, 0.0), r.number_or(j, "below", path, 0.0),
                                  r.number_or(j, "above", path, 1.0));
  else
    r.fail(join_path(path, "kind"), "unknown transform '" + kind + "' (expected identity, affine, clamp, step)");
  return out;
}

std::optional<H2qInstance> parse_instance(Reader& r, const json& j, const std::string& path, std::string& name) {
  H2qInstance inst;
  json body = j;
  if (j.is_string()) {
    name = j.get<std::string>();
    body = json::object();
  } else {
    if (!r.object(j, path)) return std::nullopt;
    r.known_keys(j, path, {"preset", "outcomes", "probs", "transforms"});
    name = r.string(j, "preset", path).value_or("custom");
  }
  if (name == "walsh_triple")
    inst = walsh_triple();
  else if (name == "independent_rademacher_pair")
    inst = independent_rademacher_pair();
  else if (name == "custom") {
    if (!body.contains("outcomes")) r.fail(join_path(path, "outcomes"), "missing");
    if (body.contains("outcomes")) {
      const auto& o = body.at("outcomes");
      if (!o.is_array()) {
        r.fail(join_path(path, "outcomes"), "expected an array of arrays");
      } else {
        for (std::size_t i = 0; i < o.size(); ++i) {
          json wrap = {{"row", o[i]}};
          inst.outcomes.push_back(r.numbers(wrap, "row", join_path(path, "outcomes") + "[" + std::to_string(i) + "]"));
        }
      }
    }
    inst.probs = r.numbers(body, "probs", path);
  } else {
    r.fail(join_path(path, "preset"), "unknown instance '" + name + "' (expected walsh_triple, independent_rademacher_pair or a custom table)");
    return std::nullopt;
  }
  if (body.contains("transforms")) {
    const auto& t = body.at("transforms");
    if (!t.is_array())
      r.fail(join_path(path, "transforms"), "expected an array of tables");
    else
      for (std::size_t i = 0; i < t.size(); ++i)
        inst.transforms.push_back(parse_transform(r, t[i], join_path(path, "transforms") + "[" + std::to_string(i) + "]"));
  }
  r.check(path, [&] { inst.validate(); });
  return inst;
}

DecompositionMode parse_mode(Reader& r, const json& obj, const std::string& path) {
  const auto s = r.string(obj, "mode", path).value_or("automatic");
  if (s == "automatic") return DecompositionMode::automatic;
  if (s == "nonnegative") return DecompositionMode::nonnegative;
  if (s == "split") return DecompositionMode::split;
  r.fail(join_path(path, "mode"), "expected automatic, nonnegative or split");
  return DecompositionMode::automatic;
}

std::string mode_name(DecompositionMode m) {
  switch (m) {
    case DecompositionMode::automatic: return "automatic";
    case DecompositionMode::nonnegative: return "nonnegative";
    case DecompositionMode::split: return "split";
  }
  return "automatic";
}

/// Smallest integer q >= 1 admitted for the given p and alpha.
double default_q(double p, double alpha) {
  if (p < 2.0 || !(alpha > 0.5)) return 1.0;
  return std::max(1.0, std::floor((alpha * p - 1.0) / (2.0 * alpha - 1.0)) + 1.0);
}

void validate_domain(Reader& r, const Scenario& s) {
  const auto& P = s.params;
  const std::string pp = "params";
  auto weights = [&] {
    r.check(pp, [&] { WeightScheme{P.p, P.alpha, P.q, P.a}.validate(); });
  };
  auto need_p_in_12 = [&] {
    if (!(P.p >= 1.0 && P.p < 2.0)) r.fail("params.p", "requires 1 <= p < 2 for " + to_string(s.command));
  };
  auto grid_list = [&] {
    if (P.grids.empty()) r.fail("params.grids", "requires at least one grid exponent");
    for (int e : P.grids)
      if (e < 0 || e > 24) r.fail("params.grids", "grid exponents must lie in [0, 24]");
  };
  auto size_ok = [&](int m, int n, const std::string& path, int max_total) {
    if (m < 1 || n < 1) r.fail(path, "requires m, n >= 1");
    if (m + n > max_total) r.fail(path, "requires m + n <= " + std::to_string(max_total));
  };
  if (!(P.confidence > 0.0 && P.confidence < 1.0)) r.fail("params.confidence", "must lie in (0, 1)");
  switch (s.command) {
    case Command::decompose:
      size_ok(P.m, P.n, "params.m", 20);
      if (P.reps < 1) r.fail("params.reps", "requires reps >= 1");
      break;
    case Command::rosenthal:
    case Command::tailbound:
      weights();
      for (const auto& [m, n] : P.sizes) size_ok(m, n, "params.sizes", 22);
      if (s.command == Command::rosenthal && P.reps < 2) r.fail("params.reps", "requires reps >= 2");
      if (!(P.epsilon > 0.0)) r.fail("params.epsilon", "requires epsilon > 0");
      break;
    case Command::h2q:
      if (!(P.q >= 1.0)) r.fail("params.q", "requires q >= 1");
      if (!P.instance) r.fail("params.instance", "missing");
      break;
    case Command::series:
      r.check(pp, [&] { validate_series_params(P.p, P.alpha, P.epsilon, P.max_block); });
      if (P.p >= 2.0) weights();
      if (P.reps < 1) r.fail("params.reps", "requires reps >= 1");
      if (P.family && !P.family->has_conjugate())
        r.fail("params.family", "regular norming needs a family with a closed-form conjugate (constant, log_power, loglog_power)");
      break;
    case Command::slln:
      need_p_in_12();
      if (P.max_exp < 2 || P.max_exp > 13) r.fail("params.max_exp", "requires 2 <= max_exp <= 13");
      break;
    case Command::wlln:
      need_p_in_12();
      grid_list();
      if (!(P.epsilon > 0.0)) r.fail("params.epsilon", "requires epsilon > 0");
      if (P.reps < 1) r.fail("params.reps", "requires reps >= 1");
      break;
    case Command::lp:
      need_p_in_12();
      grid_list();
      if (P.reps < 2) r.fail("params.reps", "requires reps >= 2");
      break;
    case Command::varying:
      for (const auto& f : P.families)
        if (!f.has_conjugate()) r.fail("params.families", f.name() + " has no closed-form conjugate");
      for (double x : P.x)
        if (!(x >= 2.0) || !std::isfinite(x)) r.fail("params.x", "evaluation points must be finite and >= 2");
      break;
    case Command::dominate:
      if (!P.candidate) r.fail("params.candidate", "missing");
      size_ok(P.m, P.n, "params.m", 24);
      if (!(P.p > 0.0)) r.fail("params.p", "requires p > 0");
      if (P.nu < 1) r.fail("params.nu", "requires nu >= 1");
      for (double k : P.k_grid)
        if (!(k >= 0.0)) r.fail("params.k_grid", "levels must be nonnegative");
      break;
    case Command::moment_series:
      if (!(P.p > 0.0 && P.p < P.q)) r.fail("params", "requires 0 < p < q");
      if (!(P.alpha > 0.0)) r.fail("params.alpha", "requires alpha > 0");
      if (P.max_term < 16 || P.max_term > (std::size_t{1} << 26)) r.fail("params.max_term", "must lie in [16, 2^26]");
      if (P.max_level < 4 || P.max_level * P.alpha > 1000.0) r.fail("params.max_level", "out of range");
      if (!(P.tau > 0.0)) r.fail("params.tau", "requires tau > 0");
      break;
  }
}

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json o = json::object();
    for (const auto& [k, v] : *t) o[std::string(k.str())] = toml_to_json(v);
    return o;
  }
  if (const auto* a = node.as_array()) {
    json arr = json::array();
    for (const auto& v : *a) arr.push_back(toml_to_json(v));
    return arr;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  // Dates and times have no use in a scenario; downstream type checks reject them.
  return nullptr;
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [k, v] : command_table())
    if (k == c) return v;
  return "unknown";
}

std::optional<Command> parse_command(const std::string& s) {
  for (const auto& [k, v] : command_table())
    if (v == s) return k;
  return std::nullopt;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : command_table()) out.push_back(v);
    return out;
  }();
  return names;
}

ConfigError::ConfigError(std::vector<std::string> v)
    : std::runtime_error([&] {
        std::string msg = "invalid scenario";
        for (const auto& s : v) msg += "\n  " + s;
        return msg;
      }()),
      violations_(std::move(v)) {}

TruncationLadder Scenario::ladder() const {
  if (params.ladder.family) return TruncationLadder::power_with_conjugate(params.alpha, *params.ladder.family);
  return TruncationLadder::power_alpha(params.alpha);
}

json to_json(const MarginalSpec& m) {
  json j;
  switch (m.kind) {
    case MarginalKind::rademacher: j["kind"] = "rademacher"; break;
    case MarginalKind::bernoulli: j["kind"] = "bernoulli"; j["prob"] = m.param; break;
    case MarginalKind::centered_bernoulli: j["kind"] = "centered_bernoulli"; j["prob"] = m.param; break;
    case MarginalKind::pareto: j["kind"] = "pareto"; j["beta"] = m.param; break;
    case MarginalKind::symmetrized_pareto: j["kind"] = "symmetrized_pareto"; j["beta"] = m.param; break;
    case MarginalKind::exponential: j["kind"] = "exponential"; j["rate"] = m.param; break;
    case MarginalKind::discrete_table: j["kind"] = "discrete"; j["values"] = m.values; j["probs"] = m.probs; break;
    case MarginalKind::tabulated_tail: j["kind"] = "tabulated"; j["knots"] = m.knots; j["tails"] = m.tails; break;
  }
  j["shift"] = m.shift;
  j["scale"] = m.scale;
  return j;
}

json to_json(const DependenceSpec& d) {
  json j;
  j["kind"] = d.name();
  switch (d.kind) {
    case DependenceSpec::Kind::iid: break;
    case DependenceSpec::Kind::pairwise_walsh: j["generators"] = d.generators; break;
    case DependenceSpec::Kind::gaussian_copula_negative: j["correlation"] = d.correlation; j["radius"] = d.radius; break;
    case DependenceSpec::Kind::moving_average: j["window"] = d.window; break;
  }
  return j;
}

json to_json(const SlowlyVaryingFamily& f) {
  json j;
  using K = SlowlyVaryingFamily::Kind;
  switch (f.kind) {
    case K::constant: j["kind"] = "constant"; j["value"] = f.gamma; break;
    case K::log_power: j["kind"] = "log_power"; j["gamma"] = f.gamma; break;
    case K::loglog_power: j["kind"] = "loglog_power"; j["gamma"] = f.gamma; break;
    case K::iterated_log_product: j["kind"] = "log_nu"; j["nu"] = f.nu; break;
    case K::iterated_log_product_sq: j["kind"] = "log_nu_sq"; j["nu"] = f.nu; break;
  }
  return j;
}

json Scenario::to_json() const {
  const auto& P = params;
  json j;
  j["name"] = name;
  j["command"] = to_string(command);
  j["seed"] = seed;
  j["out"] = out;
  j["model"]["marginal"] = cli::to_json(model.marginal);
  j["model"]["dependence"] = cli::to_json(model.dependence);
  j["model"]["modulation"] = model.modulation.name();
  json p;
  p["p"] = P.p;
  p["alpha"] = P.alpha;
  p["q"] = P.q;
  p["a"] = P.a;
  p["epsilon"] = P.epsilon;
  p["confidence"] = P.confidence;
  p["reps"] = P.reps;
  switch (command) {
    case Command::decompose:
      p["m"] = P.m;
      p["n"] = P.n;
      p["mode"] = mode_name(P.mode);
      break;
    case Command::rosenthal:
    case Command::tailbound: {
      json sz = json::array();
      for (const auto& [m, n] : P.sizes) sz.push_back({m, n});
      p["sizes"] = sz;
      break;
    }
    case Command::h2q:
      p["instance"] = P.instance_name;
      break;
    case Command::series:
      p["max_block"] = P.max_block;
      if (P.family) p["family"] = cli::to_json(*P.family);
      p["brute_force"] = P.brute_force;
      break;
    case Command::slln:
      p["max_exp"] = P.max_exp;
      break;
    case Command::wlln:
    case Command::lp:
      p["grids"] = P.grids;
      p["brute_force"] = P.brute_force;
      break;
    case Command::varying: {
      json fs = json::array();
      for (const auto& f : P.families) fs.push_back(cli::to_json(f));
      p["families"] = fs;
      p["x"] = P.x;
      break;
    }
    case Command::dominate:
      p["m"] = P.m;
      p["n"] = P.n;
      p["candidate"] = cli::to_json(*P.candidate);
      p["family"] = cli::to_json(P.family.value_or(SlowlyVaryingFamily::constant()));
      p["nu"] = P.nu;
      p["k_grid"] = P.k_grid;
      break;
    case Command::moment_series:
      p["max_term"] = P.max_term;
      p["max_level"] = P.max_level;
      p["tau"] = P.tau;
      break;
  }
  if (P.ladder.family) p["ladder"] = {{"kind", "power_with_conjugate"}, {"family", cli::to_json(*P.ladder.family)}};
  else p["ladder"] = {{"kind", "power_alpha"}};
  j["params"] = p;
  return j;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const bool is_toml = path.size() >= 5 && path.compare(path.size() - 5, 5, ".toml") == 0;
  if (is_toml) {
    try {
      return toml_to_json(toml::parse(text, path));
    } catch (const toml::parse_error& e) {
      std::ostringstream os;
      os << "TOML syntax error at line " << e.source().begin.line << ", column " << e.source().begin.column << ": " << e.description();
      throw ConfigError({os.str()});
    }
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("JSON syntax error: ") + e.what()});
  }
}

Scenario parse_scenario(const std::string& path) { return parse_scenario(load_config_file(path)); }

Scenario parse_scenario(const json& doc) {
  Reader r;
  Scenario s;
  if (!doc.is_object()) throw ConfigError({"<root>: expected a table"});
  r.known_keys(doc, "", {"name", "command", "seed", "out", "model", "params"});
  s.name = r.string(doc, "name", "").value_or("scenario");
  const auto cmd = r.string(doc, "command", "");
  if (!cmd) {
    if (!doc.contains("command")) r.fail("command", "missing");
  } else if (const auto c = parse_command(*cmd)) {
    s.command = *c;
  } else {
    std::string all;
    for (const auto& n : command_names()) all += (all.empty() ? "" : ", ") + n;
    r.fail("command", "unknown command '" + *cmd + "' (expected one of " + all + ")");
  }
  s.seed = parse_seed(r, doc);
  s.out = r.string(doc, "out", "").value_or("");

  const json empty = json::object();
  const json& model = doc.contains("model") ? doc.at("model") : empty;
  if (r.object(model, "model")) {
    r.known_keys(model, "model", {"marginal", "dependence", "modulation"});
    if (model.contains("marginal")) s.model.marginal = parse_marginal(r, model.at("marginal"), "model.marginal");
    if (model.contains("dependence")) s.model.dependence = parse_dependence(r, model.at("dependence"), "model.dependence");
    if (const auto mod = r.string(model, "modulation", "model"))
      r.check("model.modulation", [&] { s.model.modulation = Modulation::parse(*mod); });
  }

  const json& pj = doc.contains("params") ? doc.at("params") : empty;
  auto& P = s.params;
  const std::string pp = "params";
  if (r.object(pj, pp)) {
    r.known_keys(pj, pp,
                 {"p", "alpha", "q", "a", "epsilon", "confidence", "grids", "reps", "m", "n", "sizes", "max_block", "max_exp",
                  "max_term", "max_level", "tau", "ladder", "family", "families", "x", "nu", "brute_force", "mode", "candidate",
                  "k_grid", "instance"});
    P.p = r.number_or(pj, "p", pp, P.p);
    P.alpha = r.number_or(pj, "alpha", pp, 1.0 / P.p);
    P.q = r.number_or(pj, "q", pp, s.command == Command::moment_series ? 2.0 : default_q(P.p, P.alpha));
    P.a = r.number_or(pj, "a", pp, WeightScheme::default_a(P.p, P.alpha, P.q));
    P.epsilon = r.number_or(pj, "epsilon", pp, 1.0);
    P.confidence = r.number_or(pj, "confidence", pp, 0.95);
    const auto reps = r.integer_or(pj, "reps", pp, s.command == Command::decompose ? 100 : 1000);
    if (reps < 0) r.fail("params.reps", "must be nonnegative");
    P.reps = static_cast<std::size_t>(std::max(0LL, reps));
    P.m = static_cast<int>(r.integer_or(pj, "m", pp, 5));
    P.n = static_cast<int>(r.integer_or(pj, "n", pp, 5));
    P.grids = r.integers(pj, "grids", pp);
    if (!pj.contains("grids"))
      for (int e = 4; e <= 12; ++e) P.grids.push_back(e);
    if (pj.contains("sizes")) {
      const auto& sz = pj.at("sizes");
      bool ok = sz.is_array();
      for (std::size_t i = 0; ok && i < sz.size(); ++i) {
        if (!sz[i].is_array() || sz[i].size() != 2 || !sz[i][0].is_number_integer() || !sz[i][1].is_number_integer()) {
          ok = false;
          break;
        }
        P.sizes.emplace_back(sz[i][0].get<int>(), sz[i][1].get<int>());
      }
      if (!ok) r.fail("params.sizes", "expected an array of [m, n] integer pairs");
    } else {
      P.sizes.emplace_back(P.m, P.n);
    }
    P.max_block = static_cast<int>(r.integer_or(pj, "max_block", pp, 10));
    P.max_exp = static_cast<int>(r.integer_or(pj, "max_exp", pp, 10));
    const auto mt = r.integer_or(pj, "max_term", pp, 1LL << 20);
    P.max_term = static_cast<std::size_t>(std::max(0LL, mt));
    P.max_level = static_cast<int>(r.integer_or(pj, "max_level", pp, 60));
    P.tau = r.number_or(pj, "tau", pp, 1e-3);
    if (pj.contains("ladder")) {
      const auto& lj = pj.at("ladder");
      const std::string lp = "params.ladder";
      if (r.object(lj, lp)) {
        r.known_keys(lj, lp, {"kind", "family"});
        const auto kind = r.string(lj, "kind", lp).value_or("power_alpha");
        if (kind == "power_with_conjugate") {
          if (!lj.contains("family"))
            r.fail(lp + ".family", "missing (required for power_with_conjugate)");
          else {
            P.ladder.family = parse_family(r, lj.at("family"), lp + ".family");
            if (!P.ladder.family->has_conjugate()) r.fail(lp + ".family", "has no closed-form conjugate");
          }
        } else if (kind != "power_alpha") {
          r.fail(lp + ".kind", "expected power_alpha or power_with_conjugate");
        }
      }
    }
    if (pj.contains("family")) P.family = parse_family(r, pj.at("family"), "params.family");
    if (pj.contains("families")) {
      const auto& fj = pj.at("families");
      if (!fj.is_array())
        r.fail("params.families", "expected an array of tables");
      else
        for (std::size_t i = 0; i < fj.size(); ++i)
          P.families.push_back(parse_family(r, fj[i], "params.families[" + std::to_string(i) + "]"));
    } else {
      P.families = {SlowlyVaryingFamily::constant(1.0), SlowlyVaryingFamily::log_power(1.0), SlowlyVaryingFamily::log_power(2.0)};
    }
    P.x = r.numbers(pj, "x", pp);
    if (!pj.contains("x"))
      for (int k = 3; k <= 12; ++k) P.x.push_back(std::pow(10.0, k));
    P.nu = static_cast<int>(r.integer_or(pj, "nu", pp, 1));
    if (pj.contains("brute_force")) {
      if (pj.at("brute_force").is_boolean())
        P.brute_force = pj.at("brute_force").get<bool>();
      else
        r.fail("params.brute_force", "expected a boolean");
    }
    P.mode = parse_mode(r, pj, pp);
    if (pj.contains("candidate")) P.candidate = parse_marginal(r, pj.at("candidate"), "params.candidate");
    P.k_grid = r.numbers(pj, "k_grid", pp);
    if (!pj.contains("k_grid")) P.k_grid = default_k_grid();
    if (pj.contains("instance")) P.instance = parse_instance(r, pj.at("instance"), "params.instance", P.instance_name);
  }
  validate_domain(r, s);
  if (!r.errors.empty()) throw ConfigError(r.errors);
  if (s.out.empty()) s.out = "out/" + s.name;
  return s;
}

}  // namespace rfield::cli
