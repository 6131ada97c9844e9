#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spikekit/report.hpp"

namespace spikekit::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr double kWindowEps = 0.1;  // larger ε: no concentration is expected

// Mesh and factorized operator for one resolution.
struct Discretization {
  Mesh mesh;
  std::unique_ptr<EllipticOperator> op;
};

std::unique_ptr<Discretization> discretize(const ExperimentConfig& cfg, int nr, int nt) {
  auto d = std::make_unique<Discretization>();
  d->mesh = build_mesh(cfg.domain, nr, nt, cfg.grading);
  try {
    cfg.anisotropy.validate(d->mesh, cfg.ball_radius());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("anisotropy", e.what());
  }
  d->op = std::make_unique<EllipticOperator>(d->mesh, cfg.anisotropy);
  return d;
}

std::unique_ptr<Discretization> discretize(const ExperimentConfig& cfg) { return discretize(cfg, cfg.nr, cfg.nt); }

std::string out_dir(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = opt.out_dir.empty() ? cfg.output : opt.out_dir;
  fs::create_directories(dir);
  return dir;
}

void log(const RunOptions& opt, const std::string& line) {
  if (opt.log) *opt.log << line << '\n' << std::flush;
}

std::string eps_tag(std::size_t k) { return "eps" + std::to_string(k); }

Json header(const std::string& command, const ExperimentConfig& cfg) {
  Json j;
  j["command"] = command;
  j["fingerprint"] = cfg.fingerprint();
  j["resolution"] = {{"nr", cfg.nr}, {"nt", cfg.nt}, {"grading", cfg.grading}};
  return j;
}

Json point(const Vec2& x) { return Json::array({x.x(), x.y()}); }

// NaN and ±∞ are not representable in JSON; they are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void write_json(const std::string& path, const Json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

// Runs f(k) for k < n on up to `threads` workers; results are collected by
// index so the output order does not depend on scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int threads, F&& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        out[k] = f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Platform-independent uniform draw in [0, 1).
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

Json margins_json(const std::vector<ConstraintMargin>& margins) {
  Json arr = Json::array();
  for (const auto& c : margins)
    arr.push_back({{"name", c.name},
                   {"value", c.value},
                   {"threshold", c.threshold},
                   {"margin", c.margin},
                   {"relative", c.margin / c.threshold}});
  return arr;
}

struct SweepRow {
  double eps = 0.0;
  bool admissible = true;
  std::string skip_reason;
  std::vector<double> mu;
  double star = 0.0;
  Vec2 where = Vec2::Zero();
  std::array<double, 3> components{};
  double max_mu_residual = 0.0;
  bool bounds_ok = true;
  double correction_residual = 0.0;
  long clamped = 0;
};

SweepRow residual_row(const ExperimentConfig& cfg, const EllipticOperator& op, double eps, bool check,
                      const std::function<void(const Ansatz&)>& inspect = {}) {
  SweepRow row;
  row.eps = eps;
  SpikeConfig sc = cfg.spike_config(eps);
  GreenTable greens(op);
  prepare_sources(greens, sc);
  if (check) {
    const auto adm = check_admissible(sc, cfg.domain);
    if (!adm.admissible) {
      row.admissible = false;
      for (const auto& c : adm.margins)
        if (!(c.margin > 0)) row.skip_reason += (row.skip_reason.empty() ? "" : "; ") + c.name;
      return row;
    }
  }
  Ansatz an = build_ansatz(greens, sc, cfg.norm);
  row.mu = an.mu.mu.mu;
  row.max_mu_residual = an.mu.max_residual();
  row.bounds_ok = an.mu.all_bounds_ok();
  for (const auto& c : an.corrections) row.correction_residual = std::max(row.correction_residual, c.relative_residual);
  const SampleSet S = make_samples(op.mesh(), an.cfg, an.mu.mu);
  const Field R = residual_R(an.field, S.x);
  const StarNormReport rep = star_norm(R, S.x, an.cfg, an.mu.mu, cfg.norm);
  row.star = rep.value;
  row.where = rep.location;
  row.components = rep.components;
  row.clamped = an.field.clamped();
  if (inspect) inspect(an);
  return row;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  CsvWriter csv(path);
  csv.header({"eps", "admissible", "star_norm_R", "x", "y", "w_floor", "w_q", "w_xi", "mu0", "max_mu_residual",
              "bounds_ok", "correction_residual"});
  for (const auto& r : rows) {
    csv.cell(r.eps).cell(r.admissible ? 1 : 0);
    if (r.admissible) {
      csv.cell(r.star).cell(r.where.x()).cell(r.where.y());
      for (double c : r.components) csv.cell(c);
      csv.cell(r.mu.at(0)).cell(r.max_mu_residual).cell(r.bounds_ok ? 1 : 0).cell(r.correction_residual);
    } else {
      for (int k = 0; k < 10; ++k) csv.cell(std::string());
    }
    csv.end_row();
  }
}

// Index of the configured point (0 = q) closest to x.
int nearest_configured(const SpikeConfig& sc, const Vec2& x) {
  int best = 0;
  for (int i = 1; i <= sc.m; ++i)
    if ((sc.point(i) - x).norm() < (sc.point(best) - x).norm()) best = i;
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_green(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = out_dir(cfg, opt);
  auto disc = discretize(cfg);
  const EllipticOperator& op = *disc->op;
  GreenTable table(op);

  Json j = header("green", cfg);
  CsvWriter robin(dir + "/robin.csv");
  robin.header({"eps", "index", "x", "y", "location", "robin"});
  Json sources = Json::array();
  int q_id = -1;
  for (double eps : cfg.epsilons) {
    SpikeConfig sc = cfg.spike_config(eps);
    const auto ids = prepare_sources(table, sc);
    q_id = ids[0];
    for (int i = 0; i <= sc.m; ++i) {
      const auto& g = table.source(ids[i]);
      robin.cell(eps).cell(i).cell(g.y.x()).cell(g.y.y()).cell(to_string(g.location)).cell(g.robin);
      robin.end_row();
      sources.push_back({{"eps", eps}, {"index", i}, {"y", point(g.y)}, {"location", to_string(g.location)},
                         {"robin", g.robin}});
    }
  }
  log(opt, "[green] " + std::to_string(table.size()) + " sources solved");
  j["sources"] = sources;
  j["robin_q"] = table.source(q_id).robin;

  // Symmetry a(x)G(x,y) = a(y)G(y,x) on seeded random interior pairs.
  std::mt19937_64 rng(cfg.seed);
  CsvWriter sym(dir + "/symmetry.csv");
  sym.header({"pair", "x1", "y1", "x2", "y2", "defect"});
  Json pairs = Json::array();
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    std::array<Vec2, 2> pts;
    for (auto& p : pts) {
      const double th = 2 * std::numbers::pi * uniform(rng);
      const double r = 0.1 + 0.6 * uniform(rng);
      p = cfg.domain.pole + r * cfg.domain.rho(th) * Vec2(std::cos(th), std::sin(th));
    }
    const int i1 = table.add(pts[0], SourceLocation::Interior);
    const int i2 = table.add(pts[1], SourceLocation::Interior);
    const double defect = check_symmetry(table, i1, i2);
    worst = std::max(worst, defect);
    sym.cell(k).cell(pts[0].x()).cell(pts[0].y()).cell(pts[1].x()).cell(pts[1].y()).cell(defect);
    sym.end_row();
    pairs.push_back({{"x", point(pts[0])}, {"y", point(pts[1])}, {"defect", defect}});
  }
  j["symmetry"] = {{"pairs", pairs}, {"max_defect", worst}};

  // Robin value at q under refinement.
  CsvWriter conv(dir + "/convergence.csv");
  conv.header({"nr", "nt", "robin_q", "change"});
  Json table_json = Json::array();
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int f : {4, 2, 1}) {
    double robin_q;
    const int nr = std::max(16, cfg.nr / f), nt = std::max(32, 2 * (cfg.nt / (2 * f)));
    if (f == 1) {
      robin_q = j["robin_q"].get<double>();
    } else {
      auto coarse = discretize(cfg, nr, nt);
      const SourceLocation loc = cfg.q_on_boundary ? SourceLocation::Boundary : SourceLocation::Interior;
      robin_q = solve_green(*coarse->op, cfg.q, loc).robin;
    }
    const double change = std::abs(robin_q - prev);
    conv.cell(nr).cell(nt).cell(robin_q).cell(std::isfinite(change) ? fmt17(change) : std::string());
    conv.end_row();
    table_json.push_back({{"nr", nr}, {"nt", nt}, {"robin_q", robin_q}, {"change", number(change)}});
    prev = robin_q;
  }
  j["convergence"] = table_json;
  write_json(dir + "/green.json", j);
  return kOk;
}

int cmd_mu(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = out_dir(cfg, opt);
  auto disc = discretize(cfg);
  const EllipticOperator& op = *disc->op;

  struct Row {
    SpikeConfig sc;
    MuReport rep;
    AdmissibilityReport adm;
  };
  auto rows = parallel_map<Row>(cfg.epsilons.size(), opt.threads, [&](std::size_t k) {
    Row r;
    r.sc = cfg.spike_config(cfg.epsilons[k]);
    GreenTable greens(op);
    const auto ids = prepare_sources(greens, r.sc);
    r.rep = solve_mu(r.sc, greens, ids);
    r.adm = check_admissible(r.sc, cfg.domain);
    return r;
  });

  Json j = header("mu", cfg);
  Json runs = Json::array();
  CsvWriter csv(dir + "/mu.csv");
  csv.header({"eps", "index", "mu", "delta", "residual", "bound_value", "bound_lower", "bound_upper", "bound_ok"});
  for (const auto& r : rows) {
    const double eps = r.sc.eps;
    for (int i = 0; i <= r.sc.m; ++i) {
      csv.cell(eps).cell(i).cell(r.rep.mu.mu[i]).cell(eps * r.rep.mu.mu[i]).cell(r.rep.residual[i]);
      csv.cell(r.rep.bound_value[i]).cell(r.rep.bound_lower[i]).cell(r.rep.bound_upper[i]).cell(r.rep.bound_ok[i] ? 1 : 0);
      csv.end_row();
    }
    runs.push_back({{"eps", eps},
                    {"mu", r.rep.mu.mu},
                    {"max_residual", r.rep.max_residual()},
                    {"bounds_ok", r.rep.all_bounds_ok()},
                    {"warnings", r.rep.warnings},
                    {"admissible", r.adm.admissible},
                    {"margins", margins_json(r.adm.margins)}});
    log(opt, "[mu] eps=" + fmt17(eps) + " residual=" + fmt17(r.rep.max_residual()));
  }
  j["runs"] = runs;
  write_json(dir + "/mu.json", j);
  return kOk;
}

int cmd_assemble(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = out_dir(cfg, opt);
  auto disc = discretize(cfg);
  const EllipticOperator& op = *disc->op;

  auto rows = parallel_map<SweepRow>(cfg.epsilons.size(), opt.threads, [&](std::size_t k) {
    const double eps = cfg.epsilons[k];
    return residual_row(cfg, op, eps, false, [&](const Ansatz& an) {
      std::vector<std::string> names{"U"};
      std::vector<const Field*> fields{&an.field.U()};
      for (std::size_t i = 0; i < an.field.corrections().size(); ++i) {
        names.push_back("H" + std::to_string(i));
        fields.push_back(&an.field.corrections()[i]);
      }
      write_field_dump(dir + "/ansatz_" + eps_tag(k) + ".bin", op.mesh(), names, fields);
    });
  });

  write_sweep_csv(dir + "/assemble.csv", rows);
  Json j = header("assemble", cfg);
  Json runs = Json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    runs.push_back({{"eps", r.eps},
                    {"mu", r.mu},
                    {"star_norm_R", r.star},
                    {"attained_at", point(r.where)},
                    {"bounds_ok", r.bounds_ok},
                    {"correction_residual", r.correction_residual},
                    {"clamped_exponentials", r.clamped},
                    {"fields", "ansatz_" + eps_tag(k) + ".bin"}});
    log(opt, "[assemble] eps=" + fmt17(r.eps) + " |R|*=" + fmt17(r.star));
  }
  j["runs"] = runs;
  write_json(dir + "/assemble.json", j);
  return kOk;
}

int cmd_residual_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.epsilons.size() < 3) throw ConfigError("epsilons", "need ≥3 epsilons");
  const std::string dir = out_dir(cfg, opt);
  auto disc = discretize(cfg);
  const EllipticOperator& op = *disc->op;

  auto rows = parallel_map<SweepRow>(cfg.epsilons.size(), opt.threads,
                                     [&](std::size_t k) { return residual_row(cfg, op, cfg.epsilons[k], true); });
  write_sweep_csv(dir + "/residual_sweep.csv", rows);

  Json j = header("residual-sweep", cfg);
  std::vector<double> es, rs;
  Json skipped = Json::array();
  for (const auto& r : rows) {
    if (r.admissible) {
      es.push_back(r.eps);
      rs.push_back(r.star);
      log(opt, "[residual-sweep] eps=" + fmt17(r.eps) + " |R|*=" + fmt17(r.star));
    } else {
      skipped.push_back({{"eps", r.eps}, {"violated", r.skip_reason}});
      log(opt, "[residual-sweep] eps=" + fmt17(r.eps) + " skipped: inadmissible (" + r.skip_reason + ")");
    }
  }
  const double gamma = cfg.norm.residual_exponent(cfg.alpha);
  j["skipped"] = skipped;
  j["theoretical_exponent"] = gamma;
  j["required_slope"] = 0.8 * gamma;
  if (es.size() < 2) {
    j["slope"] = nullptr;
    j["meets_target"] = false;
    write_json(dir + "/residual_sweep.json", j);
    log(opt, "[residual-sweep] fewer than two admissible epsilons; no slope");
    return kNumericalFailure;
  }
  const SlopeFit fit = loglog_slope(es, rs);
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["meets_target"] = fit.slope >= 0.8 * gamma;
  Json pts = Json::array();
  for (std::size_t k = 0; k < es.size(); ++k) pts.push_back({{"eps", es[k]}, {"star_norm_R", rs[k]}});
  j["points"] = pts;
  write_json(dir + "/residual_sweep.json", j);
  log(opt, "[residual-sweep] slope=" + fmt17(fit.slope) + " target>=" + fmt17(0.8 * gamma));
  return kOk;
}

int cmd_optimize(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = out_dir(cfg, opt);
  auto disc = discretize(cfg);
  const EllipticOperator& op = *disc->op;
  Regime regime;
  try {
    regime = infer_regime(cfg.spike_config(cfg.epsilons.front()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("spikes", e.what());
  }

  auto traces = parallel_map<OptimizerTrace>(cfg.epsilons.size(), opt.threads, [&](std::size_t k) {
    return maximize_F(cfg.spike_config(cfg.epsilons[k]), op, regime, cfg.optimizer);
  });

  Json j = header("optimize", cfg);
  j["regime"] = to_string(regime);
  Json runs = Json::array();
  bool hit = false;
  std::vector<double> L, F;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto& t = traces[k];
    const double eps = cfg.epsilons[k];
    const std::string file = "optimize_trace_" + eps_tag(k) + ".csv";
    write_trace_csv(dir + "/" + file, t);
    Json xi = Json::array();
    for (const auto& x : t.final_cfg.xi) xi.push_back(point(x));
    runs.push_back({{"eps", eps},
                    {"status", to_string(t.status)},
                    {"F", t.final_energy.F},
                    {"F_unsigned", t.final_energy.F_unsigned},
                    {"xi", xi},
                    {"iterations", t.iterates.empty() ? 0 : t.iterates.back().iter},
                    {"evaluations", t.evaluations},
                    {"rejected", t.rejected},
                    {"start_scaled", t.start_scaled},
                    {"binding", t.binding},
                    {"min_relative_margin", number(t.min_relative_margin())},
                    {"margins", margins_json(t.final_margins)},
                    {"trace", file}});
    if (t.status == OptimizerStatus::HitConstraint) hit = true;
    L.push_back(std::abs(std::log(eps)));
    F.push_back(t.final_energy.F);
    log(opt, "[optimize] eps=" + fmt17(eps) + " " + to_string(t.status) + " F=" + fmt17(t.final_energy.F) +
                 " binding=" + t.binding);
  }
  j["runs"] = runs;

  const double leading = 16 * std::numbers::pi * cfg.anisotropy(cfg.q) * (1 + cfg.alpha + cfg.m);
  j["leading_coefficient_expected"] = leading;
  if (L.size() >= 2) {
    // F ≈ A|log ε| + B by least squares.
    const double n = static_cast<double>(L.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < L.size(); ++k) {
      sx += L[k];
      sy += F[k];
      sxx += L[k] * L[k];
      sxy += L[k] * F[k];
    }
    const double A = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    j["fit"] = {{"A", A}, {"B", (sy - A * sx) / n}, {"ratio_to_expected", A / leading}};
  } else {
    j["fit"] = nullptr;
  }
  j["any_hit_constraint"] = hit;
  write_json(dir + "/optimize.json", j);
  return hit ? kNumericalFailure : kOk;
}

int cmd_solve(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = out_dir(cfg, opt);
  auto disc = discretize(cfg);
  const EllipticOperator& op = *disc->op;

  struct Run {
    SpikeConfig sc;
    SolveResult res;
    std::vector<std::string> warnings;
    std::string error;
  };
  auto runs = parallel_map<Run>(cfg.epsilons.size(), opt.threads, [&](std::size_t k) {
    Run r;
    r.sc = cfg.spike_config(cfg.epsilons[k]);
    if (r.sc.eps > kWindowEps)
      r.warnings.push_back("epsilon " + fmt17(r.sc.eps) + " is outside the concentration window (> " +
                           fmt17(kWindowEps) + ")");
    try {
      GreenTable greens(op);
      Ansatz an = build_ansatz(greens, r.sc, cfg.norm);
      r.sc = an.cfg;
      r.res = newton_solve(an.field, cfg.newton);
      write_field_dump(dir + "/solve_" + eps_tag(k) + ".bin", op.mesh(), {"u", "phi"}, {&r.res.u, &r.res.phi});
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  });

  Json j = header("solve", cfg);
  Json out = Json::array();
  CsvWriter spikes(dir + "/spikes.csv");
  spikes.header({"eps", "spike", "x", "y", "sign", "configured_sign", "peak", "mass", "normalized", "target", "ratio"});
  CsvWriter summary(dir + "/solve.csv");
  summary.header({"eps", "converged", "iterations", "residual", "phi_sup", "phi_budget", "neumann_defect",
                  "total_normalized"});
  int converged = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    const double eps = cfg.epsilons[k];
    Json rj = {{"eps", eps}, {"warnings", r.warnings}};
    if (!r.error.empty()) {
      rj["converged"] = false;
      rj["message"] = r.error;
      out.push_back(rj);
      log(opt, "[solve] eps=" + fmt17(eps) + " failed: " + r.error);
      continue;
    }
    const SolveResult& s = r.res;
    if (s.converged) ++converged;
    std::vector<std::string> warnings = r.warnings;
    for (const auto& w : s.spikes.warnings) warnings.push_back(w);
    rj["warnings"] = warnings;
    rj["converged"] = s.converged;
    rj["message"] = s.message;
    rj["iterations"] = static_cast<int>(s.steps.size());
    rj["residual_history"] = s.history;
    rj["residual_sup"] = s.residual_sup;
    rj["phi_sup"] = s.phi_sup;
    rj["phi_budget"] = s.phi_budget;
    rj["phi_scale"] = s.phi_scale;
    rj["neumann_defect"] = s.neumann_defect;
    Json sj = Json::array();
    for (std::size_t i = 0; i < s.spikes.spikes.size(); ++i) {
      const auto& sp = s.spikes.spikes[i];
      const int configured = r.sc.b.at(nearest_configured(r.sc, sp.location));
      sj.push_back({{"location", point(sp.location)},
                    {"sign", sp.sign},
                    {"configured_sign", configured},
                    {"peak", sp.peak},
                    {"mass", sp.mass},
                    {"normalized", sp.normalized},
                    {"target", sp.target},
                    {"ratio", sp.normalized / sp.target},
                    {"at_q", sp.at_q},
                    {"on_boundary", sp.on_boundary}});
      spikes.cell(eps).cell(static_cast<int>(i)).cell(sp.location.x()).cell(sp.location.y()).cell(sp.sign);
      spikes.cell(configured).cell(sp.peak).cell(sp.mass).cell(sp.normalized).cell(sp.target);
      spikes.cell(sp.normalized / sp.target).end_row();
    }
    rj["spikes"] = sj;
    rj["total_normalized"] = s.spikes.total_normalized;
    rj["total_signed_mass"] = s.spikes.total_signed_mass;
    if (cfg.m == 0) rj["mass_ratio_to_c0"] = s.spikes.total_normalized / r.sc.c(0);
    rj["fields"] = "solve_" + eps_tag(k) + ".bin";
    summary.cell(eps).cell(s.converged ? 1 : 0).cell(static_cast<int>(s.steps.size())).cell(s.history.back());
    summary.cell(s.phi_sup).cell(s.phi_budget).cell(s.neumann_defect).cell(s.spikes.total_normalized).end_row();
    out.push_back(rj);
    log(opt, "[solve] eps=" + fmt17(eps) + " " + s.message + " spikes=" + std::to_string(s.spikes.spikes.size()));
  }
  j["runs"] = out;
  j["converged_runs"] = converged;
  write_json(dir + "/solve.json", j);
  return converged > 0 ? kOk : kNumericalFailure;
}

int cmd_report(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string dir = opt.out_dir.empty() ? cfg.output : opt.out_dir;
  Json j = header("report", cfg);
  Json sections;
  Json warnings = Json::array();
  for (const char* name : {"green", "mu", "assemble", "residual_sweep", "optimize", "solve"}) {
    const fs::path p = fs::path(dir) / (std::string(name) + ".json");
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
      warnings.push_back(std::string(name) + ".json is not valid JSON");
      continue;
    }
    if (doc.value("fingerprint", "") != cfg.fingerprint())
      warnings.push_back(std::string(name) + ".json was produced by a different configuration");
    sections[name] = doc;
  }
  if (sections.empty()) {
    log(opt, "[report] no reports found in " + dir);
    return kNumericalFailure;
  }
  j["warnings"] = warnings;
  j["sections"] = sections;
  write_json(dir + "/report.json", j);

  std::ostringstream os;
  os << "fingerprint " << cfg.fingerprint() << '\n';
  if (sections.contains("green")) os << "robin H(q,q) = " << fmt17(sections["green"]["robin_q"].get<double>()) << '\n';
  if (sections.contains("residual_sweep") && !sections["residual_sweep"]["slope"].is_null())
    os << "residual slope = " << fmt17(sections["residual_sweep"]["slope"].get<double>()) << " (required "
       << fmt17(sections["residual_sweep"]["required_slope"].get<double>()) << ")\n";
  if (sections.contains("optimize"))
    for (const auto& r : sections["optimize"]["runs"])
      os << "optimize eps=" << fmt17(r["eps"].get<double>()) << ' ' << r["status"].get<std::string>() << '\n';
  if (sections.contains("solve"))
    for (const auto& r : sections["solve"]["runs"])
      os << "solve eps=" << fmt17(r["eps"].get<double>()) << (r["converged"].get<bool>() ? " converged" : " failed")
         << '\n';
  for (const auto& w : warnings) os << "warning: " << w.get<std::string>() << '\n';
  log(opt, os.str());
  std::ofstream txt(dir + "/report.txt", std::ios::trunc);
  txt << os.str();
  return kOk;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spike-solution experiments for anisotropic sinh-Poisson and Liouville problems", "spikekit"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_override, resolution;
  int threads = 1;
  app.add_option("--config", config_path, "experiment config (YAML)")->required();
  app.add_option("--out", out_override, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads for per-epsilon runs")->check(CLI::PositiveNumber);
  app.add_option("--resolution", resolution, "mesh resolution NRxNT (overrides the config)");

  using Cmd = int (*)(const ExperimentConfig&, const RunOptions&);
  const std::vector<std::pair<std::string, Cmd>> table{
      {"green", cmd_green},       {"mu", cmd_mu},   {"assemble", cmd_assemble}, {"residual-sweep", cmd_residual_sweep},
      {"optimize", cmd_optimize}, {"solve", cmd_solve}, {"report", cmd_report}};
  const std::vector<std::string> help{
      "solve Green functions for q and every spike point; Robin values, symmetry, refinement",
      "solve the scaling system for mu at every epsilon",
      "assemble the approximate solution and its residual",
      "residual star-norm against epsilon with a log-log slope fit",
      "maximize the reduced energy over admissible configurations",
      "Newton solve from the ansatz with spike extraction",
      "collect the JSON summaries in the output directory"};
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < table.size(); ++k) subs.push_back(app.add_subcommand(table[k].first, help[k]));

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (!resolution.empty()) apply_resolution(cfg, resolution);
    RunOptions opt;
    opt.out_dir = out_override;
    opt.threads = threads;
    opt.log = &out;
    for (std::size_t k = 0; k < table.size(); ++k)
      if (subs[k]->parsed()) return table[k].second(cfg, opt);
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace spikekit::cli
