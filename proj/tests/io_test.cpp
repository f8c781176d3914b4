#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kerrsel/io.hpp"
#include "kerrsel/units.hpp"

using namespace kerrsel;

namespace {

SystemParams fig3_params() {
  SystemParams p;
  p.k1 = from_mhz(300.0);
  p.k2 = from_mhz(300.0 / std::sqrt(2.0));
  p.j = from_mhz(20.0);
  p.g = from_mhz(20.0);
  return p;
}

}  // namespace

TEST_CASE("protocol JSON round trip") {
  const SystemParams p = fig3_params();
  ProtocolSpec spec = noon_protocol(p);
  spec.steps[1].drive_frequency = from_mhz(300.0);
  spec.steps[1].duration = 0.008838;

  const std::string text = io::protocol_to_json(spec);
  const ProtocolSpec back = io::protocol_from_json(text);

  CHECK(back.name == spec.name);
  CHECK(back.initial == spec.initial);
  REQUIRE(back.steps.size() == spec.steps.size());
  for (size_t i = 0; i < spec.steps.size(); ++i) {
    CHECK(back.steps[i].kind == spec.steps[i].kind);
    if (spec.steps[i].is_pulse()) {
      CHECK(back.steps[i].target == spec.steps[i].target);
      CHECK(back.steps[i].angle == doctest::Approx(spec.steps[i].angle));
      CHECK(back.steps[i].drive_frequency.has_value() ==
            spec.steps[i].drive_frequency.has_value());
    }
  }
  CHECK(back.steps[1].drive_frequency.has_value());
  CHECK(*back.steps[1].drive_frequency == doctest::Approx(from_mhz(300.0)));
  CHECK(*back.steps[1].duration == doctest::Approx(0.008838));
  REQUIRE(back.target.size() == 2);
  CHECK(back.target[1].ket == KetLabel{0, 2});

  CHECK_THROWS_AS(io::protocol_from_json("{not json"), std::domain_error);
  CHECK_THROWS_AS(io::protocol_from_json(R"({"initial":[0,0],"steps":[{"kind":"WAIT"}],"target":[]})"),
                  std::domain_error);
}

TEST_CASE("CSV writers are deterministic and carry the schema line") {
  const SystemParams p = fig3_params();

  const auto map = degeneracy_map(p, {TransitionKind::BS, 2, 2}, {3, 3});
  std::ostringstream a, b;
  io::write_degeneracy_csv(a, map);
  io::write_degeneracy_csv(b, map);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# kerrsel-csv v1 spectrum-map\n", 0) == 0);
  CHECK(a.str().find("n_prime,m_prime,delta_rel_MHz,rabi_MHz,ratio") != std::string::npos);

  SimResult sim;
  sim.times = {0.0, 0.5};
  sim.tracked = {{0, 0}, {1, 1}};
  sim.populations.resize(2, 2);
  sim.populations << 1.0, 0.0, 0.25, 0.75;
  sim.fidelity = {0.0, 0.75};
  std::ostringstream c;
  io::write_dynamics_csv(c, sim);
  CHECK(c.str() ==
        "# kerrsel-csv v1 dynamics\n"
        "time_us,pop_0_0,pop_1_1,fidelity\n"
        "0,1,0,0\n"
        "0.5,0.25,0.75,0.75\n");

  Matrix vac = Matrix::Zero(3, 3);
  vac(0, 0) = 1.0;
  const WignerGrid grid = wigner(vac, 1.0, 3);
  std::ostringstream w;
  io::write_wigner_csv(w, grid);
  CHECK(w.str().rfind("# kerrsel-csv v1 wigner\n", 0) == 0);
  // 3x3 grid -> 9 data rows + schema + header
  int lines = 0;
  for (char ch : w.str()) lines += (ch == '\n');
  CHECK(lines == 11);
}

TEST_CASE("unit conversions round trip exactly") {
  for (double mhz : {0.0, 1.0, 20.0, 212.13203435596426, 300.0, 5000.0}) {
    CHECK(to_mhz(from_mhz(mhz)) == doctest::Approx(mhz).epsilon(1e-12));
  }
  CHECK(from_khz(1000.0) == doctest::Approx(from_mhz(1.0)));
}

TEST_CASE("budget and report JSON") {
  const SystemParams p = fig3_params();
  const Truncation trunc{6, 6};
  const auto report = effective_report(p, {TransitionKind::BS, 1, 1}, trunc);
  const std::string text = io::effective_report_to_json(report);
  CHECK(text.find("\"target\": \"BS(1,1)\"") != std::string::npos);
  CHECK(text.find("rabi_mhz") != std::string::npos);
  CHECK(text.find("Coherent leakage") != std::string::npos);

  const std::string budget = io::budget_to_json(report.budget);
  CHECK(budget.find("Ideal Rabi oscillation") != std::string::npos);
  CHECK(budget.find("magnitude_mhz") != std::string::npos);
  CHECK(budget.find("probability") != std::string::npos);
}

TEST_CASE("selectivity summary JSON") {
  SystemParams p;
  p.k1 = from_mhz(300.0);
  p.k2 = from_mhz(150.0);
  p.j = from_mhz(20.0);
  const Transition target{TransitionKind::BS, 2, 2};
  const auto map = degeneracy_map(p, target, {5, 5});
  const auto margin = selectivity_margin(p, target, {5, 5});
  const auto witnesses = best_rational_approximations(p.k1 / p.k2, 12);
  const std::string text = io::selectivity_summary_json(p, map, margin, witnesses);
  CHECK(text.find("exact_zeros") != std::string::npos);
  CHECK(text.find("[\n      1,\n      2\n    ]") != std::string::npos);
  CHECK(text.find("\"worst_ratio\": 0.0") != std::string::npos);
}
