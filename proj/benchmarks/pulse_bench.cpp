#include <benchmark/benchmark.h>

#include <cmath>

#include "kerrsel/pulse.hpp"
#include "kerrsel/units.hpp"

using namespace kerrsel;

namespace {

SystemParams default_params() {
  SystemParams p;
  p.k1 = from_mhz(300.0);
  p.k2 = from_mhz(300.0 / std::sqrt(2.0));
  p.j = from_mhz(20.0);
  p.g = from_mhz(20.0);
  return p;
}

void BM_RotatingFrameApply(benchmark::State& state) {
  const int nmax = int(state.range(0));
  const Truncation trunc{nmax, nmax};
  const SystemParams p = default_params();
  RotatingFramePulse h(p, trunc,
                       {Tone{CouplingKind::BS, p.j, p.k1, 0.0},
                        Tone{CouplingKind::TMS, p.g, from_mhz(40.0), 0.0}});
  Vector in = Vector::Random(trunc.dim()).normalized();
  Vector out(trunc.dim());
  double t = 0.0;
  for (auto _ : state) {
    h.apply(t, in, out);
    t += 1e-5;
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * h.element_count());
}

void BM_LabFrameMatrix(benchmark::State& state) {
  const int nmax = int(state.range(0));
  const Truncation trunc{nmax, nmax};
  const SystemParams p = default_params();
  LabFramePulse h(p, trunc, {Tone{CouplingKind::BS, p.j, p.k1, 0.0}});
  double t = 0.0;
  for (auto _ : state) {
    Matrix m = h.matrix(t);
    t += 1e-5;
    benchmark::DoNotOptimize(m.data());
  }
}

}  // namespace

BENCHMARK(BM_RotatingFrameApply)->Arg(6)->Arg(12)->Arg(25);
BENCHMARK(BM_LabFrameMatrix)->Arg(6)->Arg(12);
