#include "tdscf/harness/runner.hpp"

#include <bit>
#include <cmath>
#include <filesystem>

#include "tdscf/classical.hpp"
#include "tdscf/harness/setup.hpp"
#include "tdscf/observables.hpp"
#include "tdscf/ssp2.hpp"
#include "tdscf/svsp2.hpp"

namespace tdscf::harness {

namespace {

struct Moments {
  double q = 0;
  double p = 0;
};

Moments moments(const Ensemble<double>& ens) {
  Moments m;
  for (const auto& particle : ens.particles) {
    m.q += particle.w * particle.q;
    m.p += particle.w * particle.p;
  }
  return m;
}

bool finite(const Ensemble<double>& ens) {
  for (const auto& particle : ens.particles) {
    if (!std::isfinite(particle.q) || !std::isfinite(particle.p)) return false;
  }
  return true;
}

RunOutput run_tdscf_solver(const ExperimentConfig& cfg) {
  const Grid xg = x_grid(cfg);
  const Grid yg = y_grid(cfg);
  const double delta = effective_delta(cfg);
  TdscfProblem<double> problem{make_potential(cfg.potential, xg, yg),
                               initial_data(cfg.psi, xg, delta),
                               initial_data(cfg.phi, yg, cfg.epsilon),
                               cfg.dt,
                               cfg.t_final,
                               cfg.record_every,
                               false,
                               {}};
  problem.options.include_theta = cfg.include_theta;
  auto run = run_tdscf(problem);
  RunOutput out;
  out.trajectory.header = {"t", "m1", "m2", "E"};
  for (const auto& r : run.records) out.trajectory.rows.push_back({r.t, r.m1, r.m2, r.energy});
  out.t = run.final_state.t;
  out.fields.push_back(std::move(run.final_state.psi));
  out.fields.push_back(std::move(run.final_state.phi));
  return out;
}

RunOutput run_ehrenfest_solver(const ExperimentConfig& cfg) {
  const Grid xg = x_grid(cfg);
  const double delta = effective_delta(cfg);
  const EhrenfestProblem<double> problem{make_potential(cfg.potential, xg, y_grid(cfg)),
                                         initial_data(cfg.psi, xg, delta),
                                         cfg.y0,
                                         cfg.eta0,
                                         cfg.dt,
                                         cfg.t_final,
                                         cfg.record_every,
                                         false};
  auto run = run_ehrenfest(problem);
  RunOutput out;
  out.trajectory.header = {"t", "m1", "E", "y", "eta", "mean_x", "mean_p"};
  for (const auto& r : run.records) {
    out.trajectory.rows.push_back({r.t, r.mass, r.energy, r.y, r.eta, r.mean_x, r.mean_p});
  }
  out.t = run.final_state.t;
  out.classical = std::make_pair(run.final_state.y, run.final_state.eta);
  out.fields.push_back(std::move(run.final_state.psi));
  return out;
}

RunOutput run_classical_solver(const ExperimentConfig& cfg) {
  const auto v = make_potential(cfg.potential, x_grid(cfg), y_grid(cfg));
  auto ex = wkb_ensemble(cfg.psi, cfg, true);
  auto ey = wkb_ensemble(cfg.phi, cfg, false);
  RunOutput out;
  out.trajectory.header = {"t", "mean_x", "mean_xi", "mean_y", "mean_eta"};
  const auto record = [&](double t) {
    const auto mx = moments(ex);
    const auto my = moments(ey);
    out.trajectory.rows.push_back({t, mx.q, mx.p, my.q, my.p});
  };
  record(0);
  const StepPlan<double> plan(cfg.dt, cfg.t_final);
  for (long i = 0; i < plan.count(); ++i) {
    vlasov_step(ex, ey, v, plan.size(i));
    if (!finite(ex) || !finite(ey)) throw NumericalFailure("classical ensemble became non-finite", i + 1);
    if (record_due(i, plan.count(), cfg.record_every)) record(plan.time_after(i));
  }
  out.t = cfg.t_final;
  out.ensembles.push_back(std::move(ex));
  out.ensembles.push_back(std::move(ey));
  return out;
}

RunOutput run_mixed_solver(const ExperimentConfig& cfg) {
  const Grid xg = x_grid(cfg);
  const auto v = make_potential(cfg.potential, xg, y_grid(cfg));
  auto psi = initial_data(cfg.psi, xg, effective_delta(cfg)).field();
  auto ey = wkb_ensemble(cfg.phi, cfg, false);
  MixedPropagator<double> prop(v, xg, psi.scale());
  RunOutput out;
  out.trajectory.header = {"t", "m1", "mean_x", "mean_p", "mean_y", "mean_eta"};
  const auto record = [&](double t) {
    const auto my = moments(ey);
    out.trajectory.rows.push_back({t, psi.mass(), mean_position(psi), mean_momentum(psi), my.q, my.p});
  };
  record(0);
  const StepPlan<double> plan(cfg.dt, cfg.t_final);
  for (long i = 0; i < plan.count(); ++i) {
    prop.step(psi, ey, plan.size(i));
    if (!std::isfinite(psi.values().squaredNorm()) || !finite(ey)) throw NumericalFailure("mixed state became non-finite", i + 1);
    if (record_due(i, plan.count(), cfg.record_every)) record(plan.time_after(i));
  }
  out.t = cfg.t_final;
  out.fields.push_back(std::move(psi));
  out.ensembles.push_back(std::move(ey));
  return out;
}

CsvTable field_table(const WaveField<double>& f) {
  CsvTable t;
  t.header = {"x", "rho", "J"};
  const Eigen::VectorXd rho = f.density();
  const Eigen::VectorXd j = current_density(f);
  for (Eigen::Index i = 0; i < f.grid().size(); ++i) t.rows.push_back({f.grid().node(i), rho[i], j[i]});
  return t;
}

CsvTable ensemble_table(const Ensemble<double>& ens) {
  CsvTable t;
  t.header = {"q", "p", "w"};
  for (const auto& particle : ens.particles) t.rows.push_back({particle.q, particle.p, particle.w});
  return t;
}

CsvTable ensemble_density_table(const Ensemble<double>& ens, const Grid& g, double bandwidth) {
  const Eigen::VectorXd rho = density_from_ensemble(ens, g, bandwidth);
  const Eigen::VectorXd j = current_from_ensemble(ens, g, bandwidth);
  CsvTable t;
  t.header = {"x", "rho", "J"};
  for (Eigen::Index i = 0; i < g.size(); ++i) t.rows.push_back({g.node(i), rho[i], j[i]});
  return t;
}

}  // namespace

Ensemble<double> wkb_ensemble(const std::string& id, const ExperimentConfig& cfg, bool x_side) {
  const int extra = std::countr_zero(static_cast<unsigned>(cfg.particle_refine));
  const Grid base = x_side ? x_grid(cfg) : y_grid(cfg);
  const Grid fine = make_grid(cfg.a, cfg.b, base.exponent() + extra);
  const double scale = x_side ? effective_delta(cfg) : cfg.epsilon;
  return sample_wkb_measure(initial_data(id, fine, scale), x_side ? EnsembleSide::x : EnsembleSide::y);
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  RunOutput out;
  try {
    switch (cfg.solver) {
      case Solver::tdscf: out = run_tdscf_solver(cfg); break;
      case Solver::ehrenfest: out = run_ehrenfest_solver(cfg); break;
      case Solver::classical: out = run_classical_solver(cfg); break;
      case Solver::mixed: out = run_mixed_solver(cfg); break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out.config = cfg;
  return out;
}

void write_artifacts(const RunOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  write_csv(out.trajectory, (root / "trajectory.csv").string());
  if (!out.fields.empty() || out.classical) {
    write_snapshot({out.t, out.fields, out.classical}, (root / "final.snap").string());
  }
  const char* names[] = {"psi", "phi"};
  for (std::size_t i = 0; i < out.fields.size(); ++i) {
    write_csv(field_table(out.fields[i]), (root / (std::string(names[i]) + "_final.csv")).string());
  }
  for (const auto& ens : out.ensembles) {
    const bool x_side = ens.side == EnsembleSide::x;
    const Grid g = x_side ? x_grid(out.config) : y_grid(out.config);
    const std::string side = x_side ? "x" : "y";
    write_csv(ensemble_table(ens), (root / ("ensemble_" + side + ".csv")).string());
    write_csv(ensemble_density_table(ens, g, out.config.bandwidth_cells * g.dx()),
              (root / ("density_" + side + ".csv")).string());
  }
}

RunOutput run_preset(const std::string& name, const std::map<std::string, std::string>& overrides) {
  ExperimentConfig cfg = preset(name);
  apply_overrides(cfg, overrides);
  auto out = run_experiment(cfg);
  write_artifacts(out, cfg.output);
  return out;
}

}  // namespace tdscf::harness
