#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "tdscf/ssp2.hpp"

using namespace tdscf;
using std::numbers::pi;
using cd = std::complex<double>;

namespace {

WkbProfile<double> example1_psi() {
  return {[](double x) { return std::exp(-2 * (x + 0.1) * (x + 0.1)); },
          [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
}

WkbProfile<double> example1_phi() {
  return {[](double y) { return std::exp(-5 * (y - 0.1) * (y - 0.1)); },
          [](double y) { return std::cos(y); }, [](double y) { return -std::sin(y); }};
}

TdscfState<double> example1_state(const Grid1D<double>& xg, const Grid1D<double>& yg, double delta,
                                  double eps) {
  return {0.0, example1_psi().sample(xg, delta).field(), example1_phi().sample(yg, eps).field()};
}

TdscfProblem<double> example1_problem(const Grid1D<double>& xg, const Grid1D<double>& yg,
                                      double delta, double eps, double dt, double t_final) {
  return {PotentialSpec<double>::harmonic(), example1_psi().sample(xg, delta),
          example1_phi().sample(yg, eps), dt, t_final, 0, false, {}};
}

// Split-step for one linear Schroedinger equation, Fourier transforms by direct
// sums: kinetic(dt/2), exp(-i dt V / scale), kinetic(dt/2).
Eigen::VectorXcd linear_split_step(Eigen::VectorXcd u, const Eigen::VectorXd& v, const Grid1D<double>& g,
                                   double scale, double dt, int steps) {
  const Eigen::Index n = g.size();
  const auto half_kinetic = [&](Eigen::VectorXcd& w) {
    Eigen::VectorXcd c = oracle::dft(w, g);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = oracle::wavenumber(g, i - n / 2);
      c[i] *= std::polar(1.0, -scale * 0.5 * dt * mu * mu / 2);
    }
    for (Eigen::Index j = 0; j < n; ++j) w[j] = oracle::trig_eval(c, g, g.node(j));
  };
  for (int s = 0; s < steps; ++s) {
    half_kinetic(u);
    for (Eigen::Index j = 0; j < n; ++j) u[j] *= std::polar(1.0, -dt * v[j] / scale);
    half_kinetic(u);
  }
  return u;
}

// Exact periodic free flight over time t by direct sums.
Eigen::VectorXcd free_flight(const Eigen::VectorXcd& u, const Grid1D<double>& g, double scale, double t) {
  Eigen::VectorXcd c = oracle::dft(u, g);
  const Eigen::Index n = g.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = oracle::wavenumber(g, i - n / 2);
    c[i] *= std::polar(1.0, -scale * t * mu * mu / 2);
  }
  Eigen::VectorXcd out(n);
  for (Eigen::Index j = 0; j < n; ++j) out[j] = oracle::trig_eval(c, g, g.node(j));
  return out;
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("kinetic_step") {
  const auto g = make_grid(-pi, pi, 7);
  const auto s0 = example1_state(g, g, 1.0, 1.0 / 16);

  const auto same = kinetic_step(s0, 0.0);
  CHECK(same.psi.values() == s0.psi.values());
  CHECK(same.phi.values() == s0.phi.values());

  const auto moved = kinetic_step(s0, 0.1);
  CHECK(std::abs(moved.psi.mass() - 1.0) <= 1e-13);
  CHECK(std::abs(moved.phi.mass() - 1.0) <= 1e-13);
  CHECK(moved.t == 0.0);

  Eigen::VectorXcd mode(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) mode[j] = std::polar(1.0, g.wavenumber(5) * (g.node(j) - g.a()));
  const double delta = 0.3;
  const double dt = 0.17;
  TdscfState<double> s{0.0, WaveField<double>(mode, g, delta), WaveField<double>(mode, g, 0.5)};
  s = kinetic_step(s, dt);
  const cd factor = std::polar(1.0, -delta * dt * g.wavenumber(5) * g.wavenumber(5) / 2);
  CHECK((s.psi.values() - factor * mode).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("potential_step keeps the mean fields and the moduli") {
  const auto xg = make_grid(-pi, pi, 7);
  const auto yg = make_grid(-pi, pi, 8);
  const auto v = PotentialSpec<double>::harmonic();
  const auto s0 = example1_state(xg, yg, 1.0, 1.0 / 32);

  const auto same = potential_step(s0, v, 0.0);
  CHECK(same.psi.values() == s0.psi.values());
  CHECK(same.phi.values() == s0.phi.values());

  const auto s1 = potential_step(s0, v, 0.05);
  CHECK(max_abs(upsilon(s1.phi, v, xg) - upsilon(s0.phi, v, xg)) <= 1e-14);
  CHECK(max_abs(cal_v(s1.psi, v, yg) - cal_v(s0.psi, v, yg)) <= 1e-14);
  CHECK(std::abs(kinetic_energy(s1.psi) - kinetic_energy(s0.psi)) > 1e-6);
  CHECK(std::abs(s1.psi.mass() - 1.0) <= 1e-13);
  CHECK(std::abs(s1.phi.mass() - 1.0) <= 1e-13);
}

TEST_CASE("constant potential: trapezoidal phi update equals the single-point rule") {
  const auto xg = make_grid(-pi, pi, 7);
  const auto yg = make_grid(-pi, pi, 8);
  const double delta = 0.5;
  const double eps = 1.0 / 32;
  const double dt = 0.03;
  const auto v = PotentialSpec<double>::constant(1.0);
  const auto s0 = example1_state(xg, yg, delta, eps);
  const auto s1 = potential_step(s0, v, dt);
  const auto lam = lambda_potential(s0.psi, v, yg);
  Eigen::VectorXcd expected = s0.phi.values();
  for (Eigen::Index j = 0; j < yg.size(); ++j) expected[j] *= std::polar(1.0, -dt * lam.values[j] / eps);
  CHECK((s1.phi.values() - expected).cwiseAbs().maxCoeff() <= 1e-13);
  const Eigen::VectorXcd psi_expected = s0.psi.values() * std::polar(1.0, -dt / delta);
  CHECK((s1.psi.values() - psi_expected).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("separable potential decouples into two linear equations") {
  const auto xg = make_grid(-pi, pi, 6);
  const auto yg = make_grid(-pi, pi, 7);
  const double delta = 0.25;
  const double eps = 1.0 / 16;
  const Eigen::VectorXd v1 = xg.nodes().array().cos();
  const Eigen::VectorXd v2 = yg.nodes().array().sin();
  const auto v = PotentialSpec<double>::separable(v1, xg, v2, yg);
  const double dt = 0.4 / 40;
  const int steps = 40;
  auto s = example1_state(xg, yg, delta, eps);
  const Eigen::VectorXcd psi0 = s.psi.values();
  const Eigen::VectorXcd phi0 = s.phi.values();
  for (int i = 0; i < steps; ++i) s = strang_step(s, v, dt);
  CHECK(s.t == doctest::Approx(0.4));

  const Eigen::VectorXcd psi = linear_split_step(psi0, v1, xg, delta, dt, steps);
  const Eigen::VectorXcd phi = linear_split_step(phi0, v2, yg, eps, dt, steps);
  CHECK(l2_error(s.psi.density(), psi.cwiseAbs2().eval(), xg) <= 1e-10);
  CHECK(l2_error(s.phi.density(), phi.cwiseAbs2().eval(), yg) <= 1e-10);
}

TEST_CASE("constant potential reproduces exact free evolution at any step") {
  const auto xg = make_grid(-pi, pi, 7);
  const auto yg = make_grid(-pi, pi, 8);
  const double delta = 0.5;
  const double eps = 1.0 / 32;
  for (const double dt : {0.4 / 3, 0.4 / 16}) {
    auto problem = example1_problem(xg, yg, delta, eps, dt, 0.4);
    problem.potential = PotentialSpec<double>::constant(1.0);
    const auto run = run_tdscf(problem);
    const auto s0 = example1_state(xg, yg, delta, eps);
    const Eigen::VectorXcd psi = free_flight(s0.psi.values(), xg, delta, 0.4);
    const Eigen::VectorXcd phi = free_flight(s0.phi.values(), yg, eps, 0.4);
    CHECK(l2_error(run.final_state.psi.density(), psi.cwiseAbs2().eval(), xg) <= 1e-10);
    CHECK(l2_error(run.final_state.phi.density(), phi.cwiseAbs2().eval(), yg) <= 1e-10);
  }
}

TEST_CASE("halving dt shrinks the self-convergence difference about fourfold") {
  const auto g = make_grid(-pi, pi, 8);
  const double eps = 1.0 / 16;
  const auto final_state = [&](double dt) { return run_tdscf(example1_problem(g, g, 1.0, eps, dt, 0.4)).final_state; };
  const auto a = final_state(0.4 / 16);
  const auto b = final_state(0.4 / 32);
  const auto c = final_state(0.4 / 64);
  const double coarse = l2_error(a.psi, b.psi) + l2_error(a.phi, b.phi);
  const double fine = l2_error(b.psi, c.psi) + l2_error(b.phi, c.phi);
  CHECK(coarse / fine >= 3.0);
  CHECK(coarse / fine <= 5.0);
}

TEST_CASE("theta only changes a global phase of phi") {
  const auto g = make_grid(-pi, pi, 8);
  auto with = example1_problem(g, g, 1.0, 1.0 / 16, 0.4 / 32, 0.4);
  auto without = with;
  without.options.include_theta = false;
  const auto a = run_tdscf(with).final_state;
  const auto b = run_tdscf(without).final_state;
  CHECK(l2_error(a.phi.density(), b.phi.density(), g) <= 1e-12);
  CHECK(l2_error(a.psi.density(), b.psi.density(), g) <= 1e-12);
  CHECK(l2_error(a.phi, b.phi) > 1e-3);
}

TEST_CASE("fused kinetic half steps match the plain loop") {
  const auto g = make_grid(-pi, pi, 8);
  auto plain = example1_problem(g, g, 1.0, 1.0 / 16, 0.4 / 50, 0.4);
  plain.record_every = 7;
  auto fused = plain;
  fused.options.fuse_kinetic = true;
  const auto a = run_tdscf(plain);
  const auto b = run_tdscf(fused);
  REQUIRE(a.records.size() == b.records.size());
  CHECK(a.records.size() == 1 + 7 + 1);
  CHECK(l2_error(a.final_state.psi, b.final_state.psi) <= 1e-12);
  CHECK(l2_error(a.final_state.phi, b.final_state.phi) <= 1e-12);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].t == b.records[i].t);
    CHECK(a.records[i].energy == doctest::Approx(b.records[i].energy).epsilon(1e-12));
  }
}

TEST_CASE("run_tdscf conserves mass, records on schedule and steps to T exactly") {
  const auto g = make_grid(-pi, pi, 8);
  auto problem = example1_problem(g, g, 1.0, 1.0 / 16, 0.15, 0.4);
  problem.record_every = 1;
  problem.record_fields = true;
  const auto run = run_tdscf(problem);
  REQUIRE(run.records.size() == 4);
  CHECK(run.records[1].t == doctest::Approx(0.15));
  CHECK(run.records[2].t == doctest::Approx(0.3));
  CHECK(run.records.back().t == doctest::Approx(0.4));
  CHECK(run.final_state.t == run.records.back().t);
  for (const auto& r : run.records) {
    CHECK(std::abs(r.m1 - 1.0) <= 1e-12);
    CHECK(std::abs(r.m2 - 1.0) <= 1e-12);
    CHECK(r.rho_psi.size() == g.size());
  }
}

TEST_CASE("energy drift is second order in dt") {
  const auto g = make_grid(-pi, pi, 8);
  const auto drift = [&](double dt) {
    auto problem = example1_problem(g, g, 1.0, 1.0 / 16, dt, 0.4);
    problem.record_every = 1;
    const auto run = run_tdscf(problem);
    double worst = 0;
    for (const auto& r : run.records) worst = std::max(worst, std::abs(r.energy - run.records[0].energy));
    return worst;
  };
  const double ratio = drift(0.4 / 16) / drift(0.4 / 32);
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("unresolved grids give finite results") {
  const auto g = make_grid(-pi, pi, 6);
  const auto run = run_tdscf(example1_problem(g, g, 1.0 / 256, 1.0 / 256, 0.4 / 8, 0.4));
  CHECK(std::isfinite(run.final_state.psi.values().squaredNorm()));
  CHECK(std::abs(run.final_state.phi.mass() - 1.0) <= 1e-12);
}

TEST_CASE("non-finite state aborts with the step index") {
  const auto g = make_grid(-pi, pi, 5);
  auto problem = example1_problem(g, g, 1.0, 0.5, 0.1, 0.4);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  problem.potential = PotentialSpec<double>::analytic([nan](double, double) { return nan; },
                                                      [](double, double) { return 0.0; },
                                                      [](double, double) { return 0.0; });
  try {
    run_tdscf(problem);
    FAIL("expected NumericalFailure");
  } catch (const NumericalFailure& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("propagator rejects states on other grids or scales") {
  const auto g = make_grid(-pi, pi, 5);
  const auto h = make_grid(-pi, pi, 6);
  Ssp2Propagator<double> prop(PotentialSpec<double>::harmonic(), g, g, 1.0, 0.5);
  auto wrong_grid = example1_state(h, g, 1.0, 0.5);
  CHECK_THROWS_AS(prop.strang_step(wrong_grid, 0.1), std::invalid_argument);
  auto wrong_scale = example1_state(g, g, 1.0, 0.25);
  CHECK_THROWS_AS(prop.strang_step(wrong_scale, 0.1), std::invalid_argument);
  auto fine = example1_state(g, g, 1.0, 0.5);
  CHECK_THROWS_AS(prop.strang_step(fine, 0.0), std::invalid_argument);
}

TEST_CASE("single precision run") {
  const auto g = make_grid(-3.14159265f, 3.14159265f, 7);
  WkbProfile<float> psi{[](float x) { return std::exp(-2 * (x + 0.1f) * (x + 0.1f)); },
                        [](float x) { return std::sin(x); }, {}};
  WkbProfile<float> phi{[](float y) { return std::exp(-5 * (y - 0.1f) * (y - 0.1f)); },
                        [](float y) { return std::cos(y); }, {}};
  TdscfProblem<float> problem{PotentialSpec<float>::harmonic(), psi.sample(g, 1.0f), phi.sample(g, 0.0625f),
                              0.025f, 0.4f, 0, false, {}};
  const auto run = run_tdscf(problem);
  CHECK(std::abs(run.final_state.phi.mass() - 1.0f) < 1e-5f);
}
