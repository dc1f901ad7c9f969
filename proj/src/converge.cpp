#include "tdscf/harness/converge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tdscf/classical.hpp"
#include "tdscf/harness/setup.hpp"
#include "tdscf/observables.hpp"

namespace tdscf::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int exponent_for_spacing(double length, double spacing) {
  if (!(spacing > 0)) throw ConfigError("grid spacing must be positive");
  const double k = std::log2(length / spacing);
  const double nearest = std::round(k);
  if (std::abs(k - nearest) > 1e-9 || nearest < 2 || nearest > 20) {
    throw ConfigError("spacing " + format_double(spacing) + " is not (b - a) / 2^k with k in [2, 20]");
  }
  return static_cast<int>(nearest);
}

ExperimentConfig freeze_grids(ExperimentConfig c) {
  c.kx = effective_kx(c);
  c.ky = effective_ky(c);
  c.dx_per_scale = 0;
  return c;
}

ExperimentConfig sweep_point(const ExperimentConfig& base, Vary vary, double value) {
  ExperimentConfig c = base;
  switch (vary) {
    case Vary::dt:
      c.dt = value;
      break;
    case Vary::dx: {
      c = freeze_grids(c);
      c.kx = exponent_for_spacing(c.b - c.a, value);
      if (c.tie_grids) c.ky = c.kx;
      break;
    }
    case Vary::dy: {
      c = freeze_grids(c);
      c.ky = exponent_for_spacing(c.b - c.a, value);
      if (c.tie_grids) c.kx = c.ky;
      break;
    }
    case Vary::epsilon:
      if (c.solver == Solver::ehrenfest) {
        c.delta = value;
        c.delta_tracks_epsilon = false;
      } else {
        c.epsilon = value;
      }
      break;
  }
  return c;
}

double sweep_scale(const ExperimentConfig& c) {
  return c.solver == Solver::ehrenfest ? effective_delta(c) : c.epsilon;
}

std::string cache_path(const std::string& dir, const std::string& key) {
  char name[40];
  std::snprintf(name, sizeof name, "ref-%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return (std::filesystem::path(dir) / name).string();
}

bool fits(const RunOutput& r, const ExperimentConfig& c) {
  const std::size_t expected = c.solver == Solver::tdscf ? 2 : 1;
  if (r.fields.size() != expected) return false;
  if (r.fields[0].grid().exponent() != effective_kx(c)) return false;
  if (expected == 2 && r.fields[1].grid().exponent() != effective_ky(c)) return false;
  return (c.solver == Solver::ehrenfest) == r.classical.has_value();
}

WaveField<double> on_grid(const WaveField<double>& ref, const Grid& target) {
  return {restrict_field(ref.values(), ref.grid(), target), target, ref.scale()};
}

SweepRow compare(const RunOutput& run, const RunOutput& ref, double param) {
  SweepRow row{param, 0, 0, 0, kNaN};
  for (std::size_t i = 0; i < run.fields.size(); ++i) {
    const auto& u = run.fields[i];
    const auto v = on_grid(ref.fields[i], u.grid());
    row.err_wf += std::pow(l2_error(u, v), 2);
    row.err_rho += std::pow(density_error(u, v), 2);
    row.err_J += std::pow(current_error(u, v), 2);
  }
  row.err_wf = std::sqrt(row.err_wf);
  row.err_rho = std::sqrt(row.err_rho);
  row.err_J = std::sqrt(row.err_J);
  if (run.classical && ref.classical) {
    row.err_cl = std::hypot(run.classical->first - ref.classical->first,
                            run.classical->second - ref.classical->second);
  }
  return row;
}

void require_finer(const ExperimentConfig& ref, const ExperimentConfig& run) {
  if (ref.dt > run.dt * (1 + 1e-12)) {
    throw ConfigError("reference dt " + format_double(ref.dt) + " is coarser than sweep dt " + format_double(run.dt));
  }
  if (effective_kx(ref) < effective_kx(run) ||
      (run.solver == Solver::tdscf && effective_ky(ref) < effective_ky(run))) {
    throw ConfigError("reference grid is coarser than a sweep grid");
  }
  if (ref.solver != run.solver || ref.a != run.a || ref.b != run.b || ref.epsilon != run.epsilon ||
      effective_delta(ref) != effective_delta(run) || ref.t_final != run.t_final) {
    throw ConfigError("reference differs from the sweep in solver, domain, scales or T");
  }
}

}  // namespace

Vary parse_vary(const std::string& text) {
  if (text == "dt") return Vary::dt;
  if (text == "dx") return Vary::dx;
  if (text == "dy") return Vary::dy;
  if (text == "epsilon") return Vary::epsilon;
  throw ConfigError("unknown sweep parameter '" + text + "'");
}

std::string to_string(Vary v) {
  switch (v) {
    case Vary::dt: return "dt";
    case Vary::dx: return "dx";
    case Vary::dy: return "dy";
    case Vary::epsilon: return "epsilon";
  }
  return "dt";
}

OrderFit fit_order(const std::vector<double>& params, const std::vector<double>& errors) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < params.size() && i < errors.size(); ++i) {
    if (params[i] > 0 && errors[i] > 0 && std::isfinite(errors[i])) {
      lx.push_back(std::log10(params[i]));
      ly.push_back(std::log10(errors[i]));
    }
  }
  if (lx.size() < 2) return {kNaN, kNaN};
  const auto n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0) return {kNaN, kNaN};
  const double slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) ss += std::pow(ly[i] - (my + slope * (lx[i] - mx)), 2);
  return {slope, std::sqrt(ss / n)};
}

CsvTable SweepResult::table() const {
  CsvTable t;
  t.header = {"param", "err_wf", "err_rho", "err_J", "order_fit"};
  if (has_classical) t.header.push_back("err_cl");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    double local = kNaN;
    if (i > 0 && r.err_wf > 0 && rows[i - 1].err_wf > 0) {
      local = std::log(rows[i - 1].err_wf / r.err_wf) / std::log(rows[i - 1].param / r.param);
    }
    std::vector<double> row = {r.param, r.err_wf, r.err_rho, r.err_J, local};
    if (has_classical) row.push_back(r.err_cl);
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable SweepResult::fit_table() const {
  CsvTable t;
  t.header = {"quantity", "order", "residual"};
  t.rows.push_back({0, fit_wf.order, fit_wf.residual});
  t.rows.push_back({1, fit_rho.order, fit_rho.residual});
  t.rows.push_back({2, fit_J.order, fit_J.residual});
  if (has_classical) t.rows.push_back({3, fit_cl.order, fit_cl.residual});
  return t;
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        {
          const std::lock_guard lock(error_mutex);
          if (error) return;
        }
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

RunOutput reference_run(const ExperimentConfig& ref, const std::string& cache_dir) {
  const std::string key = canonical_string(ref);
  const std::string path = cache_dir.empty() ? std::string() : cache_path(cache_dir, key);
  if (!path.empty() && std::filesystem::exists(path + ".snap")) {
    std::ifstream k(path + ".key");
    std::stringstream stored;
    stored << k.rdbuf();
    if (stored.str() == key) {
      try {
        auto snap = read_snapshot(path + ".snap");
        RunOutput out;
        out.config = ref;
        out.t = snap.t;
        out.fields = std::move(snap.fields);
        out.classical = snap.classical;
        if (fits(out, ref)) return out;
      } catch (const std::runtime_error&) {
        // Unreadable entries are recomputed and replaced.
      }
    }
  }
  auto out = run_experiment(ref);
  if (!path.empty()) {
    write_snapshot({out.t, out.fields, out.classical}, path + ".snap");
    write_atomically(path + ".key", key);
  }
  return out;
}

SweepResult converge(const ExperimentConfig& cfg, Vary vary, const std::vector<double>& values,
                     const ReferencePolicy& policy, unsigned workers) {
  validate(cfg);
  if (cfg.solver != Solver::tdscf && cfg.solver != Solver::ehrenfest) {
    throw ConfigError("converge supports the tdscf and ehrenfest solvers");
  }
  if (values.empty()) throw ConfigError("converge needs at least one value");
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if ((values[i] > values[i - 1]) != up || values[i] == values[i - 1]) {
      throw ConfigError("sweep values must be strictly monotone");
    }
  }
  const double smallest = *std::min_element(values.begin(), values.end());

  std::vector<ExperimentConfig> points;
  for (const double v : values) {
    points.push_back(sweep_point(cfg, vary, v));
    validate(points.back());
  }

  std::optional<RunOutput> shared;
  if (vary != Vary::epsilon || policy.kind == ReferencePolicy::Kind::explicit_config) {
    ExperimentConfig ref;
    if (policy.kind == ReferencePolicy::Kind::explicit_config) {
      if (!policy.config) throw ConfigError("explicit reference policy without a configuration");
      if (vary == Vary::epsilon) throw ConfigError("epsilon sweeps need one reference per value");
      ref = *policy.config;
    } else if (vary == Vary::dt) {
      ref = cfg;
      ref.dt = smallest / 8;
    } else {
      ref = points[static_cast<std::size_t>(std::find(values.begin(), values.end(), smallest) - values.begin())];
      const int k = (vary == Vary::dx ? ref.kx : ref.ky) + 1;
      if (vary == Vary::dx || ref.tie_grids) ref.kx = std::max(ref.kx, k);
      if (vary == Vary::dy || ref.tie_grids) ref.ky = std::max(ref.ky, k);
    }
    validate(ref);
    for (const auto& p : points) require_finer(ref, p);
    shared = reference_run(ref, policy.cache_dir);
  }

  SweepResult result;
  result.vary = vary;
  result.has_classical = cfg.solver == Solver::ehrenfest;
  result.rows.resize(values.size());
  parallel_for(values.size(), workers, [&](std::size_t i) {
    const RunOutput run = run_experiment(points[i]);
    if (shared) {
      result.rows[i] = compare(run, *shared, values[i]);
      return;
    }
    ExperimentConfig ref = points[i];
    ref.dt = policy.dt_per_scale * sweep_scale(points[i]);
    validate(ref);
    require_finer(ref, points[i]);
    result.rows[i] = compare(run, reference_run(ref, policy.cache_dir), values[i]);
  });

  std::vector<double> wf, rho, j, cl;
  for (const auto& r : result.rows) {
    wf.push_back(r.err_wf);
    rho.push_back(r.err_rho);
    j.push_back(r.err_J);
    cl.push_back(r.err_cl);
  }
  result.fit_wf = fit_order(values, wf);
  result.fit_rho = fit_order(values, rho);
  result.fit_J = fit_order(values, j);
  result.fit_cl = result.has_classical ? fit_order(values, cl) : OrderFit{kNaN, kNaN};
  return result;
}

std::vector<LimitRow> limit_compare(const ExperimentConfig& cfg, const std::vector<double>& epsilons,
                                    const LimitOptions& options) {
  validate(cfg);
  if (cfg.solver != Solver::tdscf) throw ConfigError("limit-compare needs the tdscf solver");
  if (epsilons.empty()) throw ConfigError("limit-compare needs at least one epsilon");
  std::vector<std::vector<LimitRow>> per(epsilons.size());
  parallel_for(epsilons.size(), options.workers, [&](std::size_t e) {
    ExperimentConfig c = cfg;
    c.epsilon = epsilons[e];
    ExperimentConfig fine = c;
    fine.dt = options.dt_fine_per_scale * c.epsilon;
    ExperimentConfig coarse = c;
    coarse.dt = options.dt_coarse;
    ExperimentConfig cl = c;
    cl.solver = Solver::classical;
    cl.dt = options.dt_coarse;
    ExperimentConfig cl_fine = cl;
    cl_fine.particle_refine = cl.particle_refine * 4;
    for (const auto* p : {&fine, &coarse, &cl, &cl_fine}) validate(*p);

    const RunOutput qf = run_experiment(fine);
    const RunOutput qc = run_experiment(coarse);
    const RunOutput rc = run_experiment(cl);
    const RunOutput rf = run_experiment(cl_fine);
    for (int side = 0; side < 2; ++side) {
      const auto& g = qf.fields[static_cast<std::size_t>(side)].grid();
      const double bw = c.bandwidth_cells * g.dx();
      const auto& ens = rc.ensembles[static_cast<std::size_t>(side)];
      const Eigen::VectorXd rho_cl = density_from_ensemble(ens, g, bw);
      const Eigen::VectorXd j_cl = current_from_ensemble(ens, g, bw);
      const Eigen::VectorXd rho_cl4 = density_from_ensemble(rf.ensembles[static_cast<std::size_t>(side)], g, bw);
      const auto& uf = qf.fields[static_cast<std::size_t>(side)];
      const auto& uc = qc.fields[static_cast<std::size_t>(side)];
      const Eigen::VectorXd rf_q = uf.density();
      const Eigen::VectorXd rc_q = uc.density();
      per[e].push_back({c.epsilon, side, l1_distance(rf_q, rho_cl, g), l1_distance(rc_q, rho_cl, g),
                        l1_distance(rf_q, rc_q, g), l1_distance(current_density(uf), j_cl, g),
                        l1_distance(current_density(uc), j_cl, g), l1_distance(rho_cl, rho_cl4, g)});
    }
  });
  std::vector<LimitRow> rows;
  for (auto& p : per) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

CsvTable limit_table(const std::vector<LimitRow>& rows) {
  CsvTable t;
  t.header = {"epsilon", "side", "rho_fine_cl", "rho_coarse_cl", "rho_fine_coarse", "j_fine_cl", "j_coarse_cl",
              "cl_self"};
  for (const auto& r : rows) {
    t.rows.push_back({r.epsilon, static_cast<double>(r.side), r.rho_fine_cl, r.rho_coarse_cl, r.rho_fine_coarse,
                      r.j_fine_cl, r.j_coarse_cl, r.cl_self});
  }
  return t;
}

}  // namespace tdscf::harness
