#include "runner.hpp"

#include "rfield/domination.hpp"
#include "rfield/dyadic.hpp"
#include "rfield/h2q.hpp"
#include "rfield/harness.hpp"
#include "rfield/inequality.hpp"
#include "rfield/varying.hpp"
#include "rfield/weights.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace rfield::cli {

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

void Table::add(std::vector<json> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table::add: row width does not match header of " + name);
  rows.push_back(std::move(row));
}

namespace {

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  return v.dump();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json interval_json(const Interval& i) { return json::array({number_json(i.lo), number_json(i.hi)}); }

json fit_json(const SlopeFit& f) {
  return {{"slope", number_json(f.slope)},
          {"slope_ci", interval_json(f.slope_ci)},
          {"std_error", number_json(f.std_error)},
          {"points", f.points}};
}

std::string verdict_name(TrendVerdict v) { return std::string(to_string(v)); }

RunResult run_decompose(const Scenario& s, const RunOptions& opt) {
  const auto& P = s.params;
  const auto ladder = s.ladder();
  std::vector<DecompositionReport> reps(P.reps);
  parallel_for(P.reps, opt.exec, [&](std::size_t r) {
    const auto f = sample_field(s.model, P.m, P.n, s.seed, r);
    reps[r] = telescoping_decompose(f, s.model, ladder, P.m, P.n, P.mode);
  });
  Table t{"decomposition",
          {"replicate", "max_abs_sum", "max_abs_sum_closed", "i1", "i2", "i3", "i4", "r1", "r2", "r3", "r4", "deterministic_tail",
           "bound", "bound_slack", "slack_scale", "identity_residual", "bound_holds"},
          {}};
  double max_res = 0.0, min_rel_slack = kInf;
  std::size_t fails = 0;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& d = reps[r];
    t.add({r, number_json(d.max_abs_centered_sum), number_json(d.max_abs_centered_sum_closed), number_json(d.i_terms[0]),
           number_json(d.i_terms[1]), number_json(d.i_terms[2]), number_json(d.i_terms[3]), number_json(d.r_terms[0]),
           number_json(d.r_terms[1]), number_json(d.r_terms[2]), number_json(d.r_terms[3]), number_json(d.deterministic_tail),
           number_json(d.bound()), number_json(d.bound_slack), number_json(d.slack_scale), number_json(d.identity_residual),
           d.bound_holds()});
    max_res = std::max(max_res, d.identity_residual);
    min_rel_slack = std::min(min_rel_slack, d.bound_slack / d.slack_scale);
    fails += d.bound_holds() ? 0 : 1;
  }
  RunResult out;
  out.summary = {{"m", P.m},
                 {"n", P.n},
                 {"ladder", ladder.name()},
                 {"split", !reps.empty() && reps.front().split},
                 {"samples", P.reps},
                 {"max_identity_residual", number_json(max_res)},
                 {"min_relative_slack", number_json(reps.empty() ? 0.0 : min_rel_slack)},
                 {"bound_failures", fails}};
  out.tables.push_back(std::move(t));
  return out;
}

RunResult run_rosenthal(const Scenario& s, const RunOptions& opt) {
  const auto& P = s.params;
  const WeightScheme w{P.p, P.alpha, P.q, P.a};
  const auto ledger = rosenthal_ledger(s.model, P.sizes, w, s.ladder(), P.reps, s.seed, P.confidence, opt.exec);
  Table t{"ledger", {"m", "n", "q", "alpha", "a", "lhs", "lhs_ci_lo", "lhs_ci_hi", "rhs", "implied_constant"}, {}};
  double worst = 0.0;
  for (const auto& r : ledger.rows) {
    t.add({r.m, r.n, r.q, r.alpha, r.a, number_json(r.lhs), number_json(r.lhs_ci.lo), number_json(r.lhs_ci.hi), number_json(r.rhs),
           number_json(r.implied_constant)});
    worst = std::max(worst, r.implied_constant);
  }
  RunResult out;
  out.summary = {{"weights", {{"p", P.p}, {"alpha", P.alpha}, {"q", P.q}, {"a", P.a}}},
                 {"ladder", s.ladder().name()},
                 {"reps", P.reps},
                 {"max_implied_constant", number_json(worst)}};
  out.tables.push_back(std::move(t));
  return out;
}

RunResult run_tailbound(const Scenario& s, const RunOptions& opt) {
  const auto& P = s.params;
  const WeightScheme w{P.p, P.alpha, P.q, P.a};
  const auto ladder = s.ladder();
  Table t{"tailbound",
          {"m", "n", "epsilon", "split", "a_mn", "threshold", "truncation_mean_term", "truncation_mean_ok", "tail_term", "tail_ok",
           "exceedance_term", "moment_term", "rhs_bound", "lhs_probability", "lhs_ci_lo", "lhs_ci_hi", "reps", "preconditions_met"},
          {}};
  for (const auto& [m, n] : P.sizes) {
    const auto r = tailbound_check(s.model, m, n, w, ladder, P.epsilon, P.reps, derive_key(s.seed, m, n), P.confidence, opt.exec);
    t.add({m, n, r.epsilon, r.split, number_json(r.a_mn), number_json(r.threshold), number_json(r.truncation_mean_term),
           r.truncation_mean_ok, number_json(r.tail_term), r.tail_ok, number_json(r.exceedance_term), number_json(r.moment_term),
           number_json(r.rhs_bound), number_json(r.lhs_probability), number_json(r.lhs_ci.lo), number_json(r.lhs_ci.hi), r.reps,
           r.preconditions_met()});
  }
  RunResult out;
  out.summary = {{"weights", {{"p", P.p}, {"alpha", P.alpha}, {"q", P.q}, {"a", P.a}}}, {"ladder", ladder.name()}, {"reps", P.reps}};
  out.tables.push_back(std::move(t));
  return out;
}

RunResult run_h2q(const Scenario& s) {
  const auto& P = s.params;
  const auto& inst = *P.instance;
  Table t{"subsets", {"mask", "size", "members", "ratio"}, {}};
  const std::uint32_t full = (1u << inst.dims()) - 1;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    std::string members;
    int size = 0;
    for (std::size_t v = 0; v < inst.dims(); ++v)
      if (mask & (1u << v)) {
        members += (members.empty() ? "" : ";") + std::to_string(v);
        ++size;
      }
    t.add({mask, size, members, number_json(h2q_ratio(inst, mask, P.q))});
  }
  RunResult out;
  out.summary = {{"instance", P.instance_name},
                 {"q", P.q},
                 {"variables", inst.dims()},
                 {"outcomes", inst.outcomes.size()},
                 {"pairwise_independent", pairwise_independent(inst)},
                 {"min_constant", number_json(h2q_min_constant(inst, P.q))}};
  out.tables.push_back(std::move(t));
  return out;
}

RunResult run_series(const Scenario& s, const RunOptions& opt) {
  const auto& P = s.params;
  HarnessOptions ho{opt.exec, P.confidence, P.brute_force};
  const auto est = P.family ? regular_norming_series(s.model, P.p, P.alpha, P.epsilon, *P.family, P.max_block, P.reps, s.seed, ho)
                            : baum_katz_series(s.model, P.p, P.alpha, P.epsilon, P.max_block, P.reps, s.seed, ho);
  Table t{"series",
          {"k", "l", "block_weight", "threshold", "hits", "reps", "tail_prob", "ci_lo", "ci_hi", "weighted_term", "running_sum"},
          {}};
  for (const auto& r : est.rows)
    t.add({r.k, r.l, number_json(r.block_weight), number_json(r.threshold), r.hits, r.reps, number_json(r.tail_prob),
           number_json(r.ci.lo), number_json(r.ci.hi), number_json(r.weighted_term), number_json(r.running_sum)});
  Table lv{"levels", {"level", "increment"}, {}};
  for (std::size_t i = 0; i < est.level_increments.size(); ++i) lv.add({static_cast<int>(i) + 2, number_json(est.level_increments[i])});
  RunResult out;
  out.summary = {{"p", P.p},
                 {"alpha", P.alpha},
                 {"epsilon", P.epsilon},
                 {"reps", P.reps},
                 {"max_block", P.max_block},
                 {"norming", est.norming},
                 {"partial_sum", number_json(est.partial_sum())},
                 {"fit_from_level", est.fit_from},
                 {"term_fit", fit_json(est.term_fit)},
                 {"verdict", verdict_name(est.term_verdict)}};
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(lv));
  return out;
}

RunResult trace_result(const ConvergenceTrace& tr, double p) {
  Table t{"trace", {"grid", "m_exp", "n_exp", "cells", "statistic", "ci_lo", "ci_hi", "hits", "reps"}, {}};
  for (const auto& pt : tr.points)
    t.add({pt.grid, pt.m_exp, pt.n_exp, number_json(pt.cells), number_json(pt.statistic), number_json(pt.ci.lo), number_json(pt.ci.hi),
           pt.hits, pt.reps});
  RunResult out;
  out.summary = {{"operation", tr.operation},
                 {"surrogate", tr.surrogate},
                 {"p", p},
                 {"fit", fit_json(tr.fit)},
                 {"verdict", verdict_name(tr.verdict)}};
  out.tables.push_back(std::move(t));
  return out;
}

RunResult run_varying(const Scenario& s) {
  const auto& P = s.params;
  Table t{"residuals", {"family", "x", "L", "conjugate", "residual", "residual_swapped"}, {}};
  json per = json::array();
  for (const auto& f : P.families) {
    const auto conj = debruijn_conjugate(f);
    bool nonincreasing = true;
    double prev = kInf, worst = 0.0;
    for (double x : P.x) {
      const double r = debruijn_residual(f, x);
      t.add({f.name(), number_json(x), number_json(f(x)), number_json(conj(x)), number_json(r),
             number_json(debruijn_residual_swapped(f, x))});
      nonincreasing = nonincreasing && r <= prev;
      prev = r;
      worst = std::max(worst, r);
    }
    per.push_back({{"family", f.name()}, {"conjugate", conj.name()}, {"nonincreasing", nonincreasing}, {"max_residual", number_json(worst)}});
  }
  RunResult out;
  out.summary = {{"families", per}};
  out.tables.push_back(std::move(t));
  return out;
}

RunResult run_dominate(const Scenario& s) {
  const auto& P = s.params;
  const auto cells = family_laws(s.model, P.m, P.n);
  const auto rep = domination_check(cells, *P.candidate);
  Table d{"domination", {"x", "sup_tail", "candidate_tail", "violation"}, {}};
  for (std::size_t k = 0; k < rep.x_grid.size(); ++k)
    d.add({number_json(rep.x_grid[k]), number_json(rep.dominator_tail[k]), number_json(rep.candidate_tail[k]),
           number_json(rep.dominator_tail[k] - rep.candidate_tail[k])});
  const auto l = P.family.value_or(SlowlyVaryingFamily::constant());
  const auto ui = uniform_integrability_trace(cells, PowerWeight{P.p, l}, P.k_grid);
  Table u{"ui_trace", {"K", "value"}, {}};
  for (std::size_t k = 0; k < ui.k_grid.size(); ++k) u.add({number_json(ui.k_grid[k]), number_json(ui.values[k])});
  const auto dm = dominator_moment_check(cells, P.p, l, P.nu);
  RunResult out;
  out.summary = {{"cell_laws", cells.size()},
                 {"max_violation", number_json(rep.max_violation)},
                 {"dominated", rep.dominated()},
                 {"ui_tends_to_zero", ui.tends_to_zero},
                 {"family_moment", number_json(dm.family_moment)},
                 {"family_finite", dm.family_finite},
                 {"dominator_moment", number_json(dm.dominator_moment)},
                 {"dominator_finite", dm.dominator_finite},
                 {"dominator_knots", rep.dominator.knots.size()}};
  Table dom{"dominator", {"x", "tail"}, {}};
  for (std::size_t k = 0; k < rep.dominator.knots.size(); ++k)
    dom.add({number_json(rep.dominator.knots[k]), number_json(rep.dominator.tails[k])});
  out.tables.push_back(std::move(d));
  out.tables.push_back(std::move(u));
  out.tables.push_back(std::move(dom));
  return out;
}

RunResult run_moment_series(const Scenario& s) {
  const auto& P = s.params;
  const auto rep = moment_series_check(s.model.marginal, P.p, P.alpha, P.q, P.max_term, P.max_level, P.tau);
  Table it{"items", {"item", "partial_sum", "terms", "term_exponent", "critical", "classification"}, {}};
  Table bl{"blocks", {"item", "block", "value"}, {}};
  for (const auto& i : rep.items) {
    it.add({i.item, number_json(i.partial_sum), i.terms, number_json(i.term_exponent), i.critical, std::string(to_string(i.classification))});
    for (std::size_t k = 0; k < i.blocks.size(); ++k) bl.add({i.item, k, number_json(i.blocks[k])});
  }
  RunResult out;
  out.summary = {{"p", P.p},
                 {"alpha", P.alpha},
                 {"q", P.q},
                 {"moment_p_log", number_json(rep.item_i)},
                 {"moment_p_log_finite", rep.item_i_finite},
                 {"consistent", rep.consistent}};
  out.tables.push_back(std::move(it));
  out.tables.push_back(std::move(bl));
  return out;
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << bytes;
  if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + csv_cell(r[c]);
    out += "\n";
  }
  return out;
}

json Table::to_json() const {
  json arr = json::array();
  for (const auto& r : rows) {
    json o = json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) o[columns[c]] = r[c];
    arr.push_back(std::move(o));
  }
  return arr;
}

json RunManifest::to_json() const {
  json files_j = json::array();
  for (const auto& f : files) files_j.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"scenario", scenario_name}, {"command", command},         {"scenario_hash", scenario_hash},
          {"toolkit_version", toolkit_version}, {"seed", seed}, {"started_at", started_at},
          {"finished_at", finished_at},  {"files", files_j}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.scenario_name = j.at("scenario").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.scenario_hash = j.at("scenario_hash").get<std::string>();
  m.toolkit_version = j.at("toolkit_version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  for (const auto& f : j.at("files"))
    m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(), f.at("bytes").get<std::uintmax_t>()});
  return m;
}

json experiment_json(const Scenario& s) {
  auto j = s.to_json();
  j.erase("out");
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

RunResult execute(const Scenario& s, const RunOptions& opt) {
  const auto& P = s.params;
  HarnessOptions ho{opt.exec, P.confidence, P.brute_force};
  switch (s.command) {
    case Command::decompose: return run_decompose(s, opt);
    case Command::rosenthal: return run_rosenthal(s, opt);
    case Command::tailbound: return run_tailbound(s, opt);
    case Command::h2q: return run_h2q(s);
    case Command::series: return run_series(s, opt);
    case Command::slln: return trace_result(mz_slln_trace(s.model, P.p, P.max_exp, s.seed, ho), P.p);
    case Command::wlln: return trace_result(feller_wlln(s.model, P.p, P.grids, P.epsilon, P.reps, s.seed, ho), P.p);
    case Command::lp: return trace_result(pyke_root_lp(s.model, P.p, P.grids, P.reps, s.seed, ho), P.p);
    case Command::varying: return run_varying(s);
    case Command::dominate: return run_dominate(s);
    case Command::moment_series: return run_moment_series(s);
  }
  throw std::logic_error("unhandled command");
}

RunManifest run(const Scenario& s, const RunOptions& opt) {
  RunManifest man;
  man.scenario_name = s.name;
  man.command = to_string(s.command);
  man.toolkit_version = kToolkitVersion;
  man.seed = s.seed;
  man.started_at = utc_now();
  const json exp = experiment_json(s);
  man.scenario_hash = sha256_hex(exp.dump());

  const auto result = execute(s, opt);

  const fs::path dir(s.out);
  const bool created = !fs::exists(dir);
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    auto emit = [&](const std::string& name, const std::string& bytes) {
      const fs::path p = dir / name;
      written.push_back(p);
      write_file(p, bytes);
      man.files.push_back({name, sha256_hex(bytes), bytes.size()});
    };
    if (opt.format != OutputFormat::json) {
      for (const auto& t : result.tables) emit(t.name + ".csv", t.to_csv());
      json sum = {{"scenario", exp}, {"summary", result.summary}};
      emit("summary.json", sum.dump(2) + "\n");
    }
    if (opt.format != OutputFormat::csv) {
      json all = {{"scenario", exp}, {"summary", result.summary}, {"tables", json::object()}};
      for (const auto& t : result.tables) all["tables"][t.name] = t.to_json();
      emit("result.json", all.dump(2) + "\n");
    }
    man.finished_at = utc_now();
    const fs::path mp = dir / "manifest.json";
    written.push_back(mp);
    write_file(mp, man.to_json().dump(2) + "\n");
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created) fs::remove(dir, ec);  // only succeeds when empty
    throw;
  }
  return man;
}

RunManifest read_manifest(const std::string& dir_or_file) {
  fs::path p(dir_or_file);
  if (fs::is_directory(p)) p /= "manifest.json";
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read manifest '" + p.string() + "'");
  try {
    return RunManifest::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest '" + p.string() + "': " + e.what());
  }
}

std::vector<std::string> verify_manifest(const RunManifest& m, const std::string& dir) {
  std::vector<std::string> bad;
  for (const auto& f : m.files) {
    const auto p = (fs::path(dir) / f.path).string();
    if (!fs::exists(p) || sha256_file(p) != f.sha256) bad.push_back(f.path);
  }
  return bad;
}

}  // namespace rfield::cli
