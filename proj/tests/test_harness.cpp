#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "tdscf/harness/config.hpp"
#include "tdscf/harness/converge.hpp"
#include "tdscf/harness/io.hpp"
#include "tdscf/harness/runner.hpp"
#include "tdscf/harness/setup.hpp"
#include "tdscf/time_stepping.hpp"

using namespace tdscf;
namespace h = tdscf::harness;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tdscf_harness_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spill(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

h::ExperimentConfig small_tdscf() {
  auto c = h::preset("example1");
  c.epsilon = 1.0 / 16;
  c.dx_per_scale = 0;
  c.kx = c.ky = 6;
  c.dt = 0.4 / 16;
  return c;
}

}  // namespace

TEST_CASE("csv round trip is bit exact") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  h::CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows.push_back({0.1, -0.0, 1e-310});
  t.rows.push_back({std::numeric_limits<double>::max(), std::numeric_limits<double>::quiet_NaN(), pi});
  for (int i = 0; i < 50; ++i) t.rows.push_back({u(rng) * 1e-7, u(rng), u(rng) * 1e12});
  const auto dir = scratch("csv");
  const auto path = (dir / "t.csv").string();
  h::write_csv(t, path);
  const auto back = h::read_csv(path);
  REQUIRE(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double x = t.rows[i][j];
      const double y = back.rows[i][j];
      if (std::isnan(x)) {
        CHECK(std::isnan(y));
      } else {
        CHECK(std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y));
      }
    }
  }
  CHECK(slurp(path).starts_with("a,b,c\n0.10000000000000001,-0,9.9999999999999694e-311\n"));
}

TEST_CASE("csv errors carry the path") {
  const auto dir = scratch("csv_err");
  const auto bad = dir / "bad.csv";
  spill(bad, "x,y\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(h::read_csv(bad.string()), doctest::Contains("bad.csv"), std::runtime_error);
  spill(bad, "x,y\n1,zz\n");
  CHECK_THROWS_WITH_AS(h::read_csv(bad.string()), doctest::Contains("bad number"), std::runtime_error);
  CHECK_THROWS_WITH_AS(h::read_csv((dir / "missing.csv").string()), doctest::Contains("missing.csv"),
                       std::runtime_error);
  h::CsvTable ragged{{"a", "b"}, {{1.0}}};
  CHECK_THROWS_AS(h::write_csv(ragged, (dir / "r.csv").string()), std::runtime_error);
}

TEST_CASE("numbers accept fractions and pi") {
  CHECK(h::parse_number("0.4/8") == 0.4 / 8);
  CHECK(h::parse_number(" 1/512 ") == 1.0 / 512);
  CHECK(h::parse_number("-pi") == -pi);
  CHECK(h::parse_number("2pi/16") == 2 * pi / 16);
  CHECK(h::parse_number("1e-3") == 1e-3);
  CHECK_THROWS_AS(h::parse_number("abc"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_number("1/0"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_number("1/2/3"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_number("3x"), h::ConfigError);
}

TEST_CASE("presets carry the experiment parameters") {
  const auto e1 = h::preset("example1");
  CHECK(e1.delta == 1.0);
  CHECK(e1.potential == "harmonic");
  CHECK(e1.t_final == 0.4);
  CHECK(e1.a == doctest::Approx(-pi).epsilon(1e-15));
  CHECK(e1.b == doctest::Approx(pi).epsilon(1e-15));

  const auto e2 = h::preset("example2");
  CHECK(e2.a == 0.0);
  CHECK(e2.b == 1.0);
  CHECK(e2.potential == "constant:1");
  CHECK(e2.t_final == 0.54);
  CHECK(e2.epsilon == 1.0 / 512);
  CHECK(h::effective_delta(e2) == e2.epsilon);
  CHECK(h::effective_kx(e2) == 12);

  const auto e4 = h::preset("example4");
  CHECK(e4.solver == h::Solver::ehrenfest);
  CHECK(e4.y0 == 0.0);
  CHECK(e4.eta0 == 0.1);
  CHECK(h::effective_kx(e4) == 12);

  const auto e3 = h::preset("example3");
  CHECK(h::effective_kx(e3) == 12);
  CHECK(h::effective_ky(e3) == 12);
  for (const auto& name : h::preset_names()) CHECK_NOTHROW(h::validate(h::preset(name)));
  CHECK_THROWS_AS(h::preset("example5"), h::ConfigError);
}

TEST_CASE("key = value and JSON configuration") {
  const auto kv = h::parse_config_text("# comment\npreset = example2\nepsilon = 1/256  # trailing\ndt=0.54/32\n");
  CHECK(kv.preset == "example2");
  CHECK(kv.epsilon == 1.0 / 256);
  CHECK(kv.dt == 0.54 / 32);
  CHECK(kv.potential == "constant:1");

  const auto js = h::parse_config_text(R"({"dt": 0.01, "preset": "example3", "kx": 7, "include_theta": false})");
  CHECK(js.preset == "example3");
  CHECK(js.dt == 0.01);
  CHECK(js.kx == 7);
  CHECK_FALSE(js.include_theta);

  CHECK_THROWS_AS(h::parse_config_text("nonsense line"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_config_text("colour = blue"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_config_text("kx = 2.5"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_config_text("include_theta = maybe"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_config_text(R"({"dt": [1]})"), h::ConfigError);
  CHECK_THROWS_AS(h::parse_config_text("{bad json"), h::ConfigError);
  CHECK_THROWS_AS(h::load_config_file("/nonexistent/cfg.txt"), h::ConfigError);
}

TEST_CASE("validation rejects broken invariants") {
  auto c = h::preset("example1");
  c.dt = 1.0;
  CHECK_THROWS_AS(h::validate(c), h::ConfigError);
  c = h::preset("example1");
  c.epsilon = 1.5;
  CHECK_THROWS_AS(h::validate(c), h::ConfigError);
  c = h::preset("example1");
  c.kx = 25;
  CHECK_THROWS_AS(h::validate(c), h::ConfigError);
  c = h::preset("example1");
  c.particle_refine = 3;
  CHECK_THROWS_AS(h::validate(c), h::ConfigError);
  c = h::preset("example1");
  c.potential = "wobbly";
  CHECK_THROWS_AS(h::run_experiment(c), h::ConfigError);
  c = h::preset("example1");
  c.psi = "ex9_psi";
  CHECK_THROWS_AS(h::run_experiment(c), h::ConfigError);
}

TEST_CASE("grid rule refines to the requested spacing per scale") {
  auto c = h::preset("example1");
  c.epsilon = 1.0 / 64;
  CHECK(h::effective_ky(c) == 10);
  CHECK(h::effective_kx(c) == 9);
  c.kx = 3;
  CHECK(h::effective_kx(c) == 4);
}

TEST_CASE("canonical string ignores the output path only") {
  auto a = h::preset("example1");
  auto b = a;
  b.output = "elsewhere";
  CHECK(h::canonical_string(a) == h::canonical_string(b));
  b.dt /= 2;
  CHECK(h::canonical_string(a) != h::canonical_string(b));
  CHECK(h::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(h::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("snapshot round trip") {
  const auto g = make_grid(0.0, 1.0, 4);
  Eigen::VectorXcd u(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) u[j] = {std::sin(j + 0.5), std::cos(3.0 * j)};
  h::Snapshot s{0.25, {WaveField<double>(u, g, 0.125)}, std::make_pair(0.3, -0.7)};
  const auto dir = scratch("snap");
  const auto path = (dir / "s.snap").string();
  h::write_snapshot(s, path);
  const auto back = h::read_snapshot(path);
  CHECK(back.t == 0.25);
  REQUIRE(back.fields.size() == 1);
  CHECK(back.fields[0].grid() == g);
  CHECK(back.fields[0].scale() == 0.125);
  CHECK(back.fields[0].values() == u);
  REQUIRE(back.classical);
  CHECK(back.classical->first == 0.3);
  CHECK(back.classical->second == -0.7);

  const std::string bytes = slurp(path);
  spill(dir / "trunc.snap", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(h::read_snapshot((dir / "trunc.snap").string()), std::runtime_error);
  spill(dir / "junk.snap", "NOTASNAP");
  CHECK_THROWS_AS(h::read_snapshot((dir / "junk.snap").string()), std::runtime_error);
}

TEST_CASE("order fit recovers an exact power law") {
  const std::vector<double> p = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> e;
  for (const double x : p) e.push_back(3.0 * x * x);
  const auto f = h::fit_order(p, e);
  CHECK(f.order == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);
  e[1] *= 10;
  CHECK(h::fit_order(p, e).residual > 0.1);
  CHECK(std::isnan(h::fit_order({0.1}, {1.0}).order));
}

TEST_CASE("parallel_for preserves indices and propagates errors") {
  std::vector<int> out(37, -1);
  h::parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(h::parallel_for(10, 3,
                                  [](std::size_t i) {
                                    if (i == 7) throw std::runtime_error("boom");
                                  }),
                  std::runtime_error);
}

TEST_CASE("identical configurations write byte-identical artifacts") {
  auto c = small_tdscf();
  c.record_every = 2;
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  h::write_artifacts(h::run_experiment(c), a.string());
  h::write_artifacts(h::run_experiment(c), b.string());
  for (const char* f : {"trajectory.csv", "final.snap", "psi_final.csv", "phi_final.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(!slurp(a / f).empty());
  }
  const auto traj = h::read_csv((a / "trajectory.csv").string());
  CHECK(traj.header == std::vector<std::string>{"t", "m1", "m2", "E"});
  CHECK(traj.rows.size() == 9);
}

TEST_CASE("run_preset applies overrides and writes to the output path") {
  const auto dir = scratch("preset");
  const auto out = h::run_preset("example4", {{"delta", "1/16"}, {"dt", "0.1"}, {"out", dir.string()}});
  CHECK(out.classical.has_value());
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "final.snap"));
  const auto traj = h::read_csv((dir / "trajectory.csv").string());
  CHECK(traj.header.back() == "mean_p");
  CHECK_THROWS_AS(h::run_preset("example4", {{"dt", "fast"}}), h::ConfigError);
  CHECK_THROWS_AS(h::run_preset("nope", {}), h::ConfigError);
}

TEST_CASE("classical and mixed solvers write ensembles") {
  auto c = h::preset("example2");
  c.epsilon = 1.0 / 64;
  c.solver = h::Solver::classical;
  const auto dir = scratch("classical");
  const auto out = h::run_experiment(c);
  REQUIRE(out.ensembles.size() == 2);
  h::write_artifacts(out, dir.string());
  const auto ens = h::read_csv((dir / "ensemble_y.csv").string());
  CHECK(ens.header == std::vector<std::string>{"q", "p", "w"});
  CHECK(ens.rows.size() == static_cast<std::size_t>(4 * h::y_grid(c).size()));
  const auto rho = h::read_csv((dir / "density_y.csv").string());
  double mass = 0;
  for (const auto& r : rho.rows) mass += r[1] * h::y_grid(c).dx();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));

  auto m = h::preset("example3");
  m.epsilon = 1.0 / 16;
  m.solver = h::Solver::mixed;
  const auto mixed = h::run_experiment(m);
  CHECK(mixed.fields.size() == 1);
  CHECK(mixed.ensembles.size() == 1);
  CHECK(std::abs(mixed.trajectory.rows.back()[1] - 1.0) <= 1e-12);
}

TEST_CASE("table initial data matches the named profile") {
  const auto dir = scratch("table");
  const auto g = make_grid(-pi, pi, 6);
  const auto ref = h::named_profile("ex1_phi").sample(g, 0.25);
  h::CsvTable t{{"amplitude", "phase", "phase_gradient"}, {}};
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    t.rows.push_back({ref.amplitude[j], ref.phase[j], (*ref.phase_gradient)[j]});
  }
  const auto path = (dir / "phi.csv").string();
  h::write_csv(t, path);
  const auto d = h::initial_data("table:" + path, g, 0.25);
  CHECK(d.amplitude == ref.amplitude);
  CHECK(d.phase == ref.phase);
  REQUIRE(d.phase_gradient);
  CHECK(*d.phase_gradient == *ref.phase_gradient);
  CHECK_THROWS_AS(h::initial_data("table:" + path, make_grid(-pi, pi, 5), 0.25), h::ConfigError);
}

TEST_CASE("potential strings") {
  const auto g = make_grid(-pi, pi, 5);
  CHECK(h::make_potential("harmonic", g, g).kind() == PotentialKind::harmonic);
  CHECK(h::make_potential("constant:2.5", g, g).kind() == PotentialKind::constant);
  const auto sep = h::make_potential("separable:cos,sin", g, g);
  CHECK(sep.kind() == PotentialKind::separable);
  CHECK(sep.value(0.3, 0.7) == doctest::Approx(std::cos(0.3) + std::sin(0.7)).epsilon(1e-12));
  const auto dir = scratch("pot");
  std::ostringstream rows;
  for (int i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) rows << (j ? "," : "") << h::format_double(i == 0 ? std::cos(g.node(j)) : 0.0);
    rows << "\n";
  }
  spill(dir / "sep.csv", rows.str());
  const auto file = h::make_potential("separable_file:" + (dir / "sep.csv").string(), g, g);
  CHECK(file.value(0.3, 0.1) == doctest::Approx(std::cos(0.3)).epsilon(1e-12));
  CHECK_THROWS_AS(h::make_potential("separable:cos", g, g), h::ConfigError);
  CHECK_THROWS_AS(h::make_potential("separable:tan,sin", g, g), h::ConfigError);
  CHECK_THROWS_AS(h::make_potential("table:/nonexistent.csv", g, g), h::ConfigError);
}

TEST_CASE("converge: dt sweep, reference checks and cache") {
  const auto c = small_tdscf();
  const std::vector<double> dts = {0.4 / 4, 0.4 / 8, 0.4 / 16};
  const auto dir = scratch("cache");
  h::ReferencePolicy policy;
  policy.cache_dir = dir.string();
  const auto first = h::converge(c, h::Vary::dt, dts, policy, 2);
  REQUIRE(first.rows.size() == 3);
  for (std::size_t i = 1; i < first.rows.size(); ++i) CHECK(first.rows[i].err_wf < first.rows[i - 1].err_wf);
  CHECK(first.fit_wf.order == doctest::Approx(2.0).epsilon(0.15));
  std::size_t cached = 0;
  for (const auto& e : fs::directory_iterator(dir)) cached += e.path().extension() == ".snap";
  CHECK(cached == 1);
  const auto second = h::converge(c, h::Vary::dt, dts, policy, 1);
  for (std::size_t i = 0; i < dts.size(); ++i) CHECK(second.rows[i].err_wf == first.rows[i].err_wf);

  const auto table = first.table();
  CHECK(table.header == std::vector<std::string>{"param", "err_wf", "err_rho", "err_J", "order_fit"});
  CHECK(std::isnan(table.rows[0][4]));

  h::ReferencePolicy coarse;
  coarse.kind = h::ReferencePolicy::Kind::explicit_config;
  coarse.config = c;
  coarse.config->dt = 0.4 / 8;
  CHECK_THROWS_AS(h::converge(c, h::Vary::dt, dts, coarse), h::ConfigError);
  CHECK_THROWS_AS(h::converge(c, h::Vary::dt, {0.1, 0.05, 0.08}), h::ConfigError);
  CHECK_THROWS_AS(h::converge(c, h::Vary::dx, {0.3}), h::ConfigError);
  CHECK_THROWS_AS(h::parse_vary("dz"), h::ConfigError);
}

TEST_CASE("converge: grid sweep compares on the coarse grid and Ehrenfest reports err_cl") {
  auto c = small_tdscf();
  c.tie_grids = true;
  const auto r = h::converge(c, h::Vary::dx, {2 * pi / 32, 2 * pi / 64});
  CHECK(r.rows[1].err_rho < r.rows[0].err_rho);

  auto e = h::preset("example4");
  e.delta = 1.0 / 16;
  const auto eh = h::converge(e, h::Vary::dt, {0.1, 0.05});
  REQUIRE(eh.has_classical);
  CHECK(eh.rows[1].err_cl < eh.rows[0].err_cl);
  CHECK(eh.table().header.back() == "err_cl");
}

TEST_CASE("limit_compare table has one row per epsilon and side") {
  auto c = h::preset("example2");
  const auto rows = h::limit_compare(c, {1.0 / 32, 1.0 / 64});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].side == 0);
  CHECK(rows[1].side == 1);
  CHECK(rows[2].epsilon == 1.0 / 64);
  for (const auto& r : rows) {
    CHECK(r.rho_fine_cl >= 0);
    CHECK(r.cl_self <= 0.01);
  }
  CHECK(h::limit_table(rows).rows.size() == 4);
  c.potential = "table:/nonexistent.csv";
  CHECK_THROWS_AS(h::limit_compare(c, {1.0 / 32}), h::ConfigError);
}

TEST_CASE("non-finite potential aborts with NumericalFailure") {
  auto c = small_tdscf();
  c.potential = "constant:nan";
  CHECK_THROWS_AS(h::run_experiment(c), NumericalFailure);
}
