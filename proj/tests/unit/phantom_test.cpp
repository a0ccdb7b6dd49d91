#include "ncsub/metrics.hpp"
#include "ncsub/phantom.hpp"
#include "ncsub/solvers.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>

using namespace ncsub;
using testing::rel;

namespace {

auto rms(CxArray const &a) -> double { return la::norm(a) / std::sqrt(static_cast<double>(a.size())); }

auto small_sim(double noise, std::uint64_t seed = 1) -> SimConfig
{
  SimConfig c;
  c.phantom.nx = c.phantom.ny = 16;
  c.phantom.motion_amplitude = 0.2;
  c.coils = 3;
  c.spokes = 64;
  c.samples = 32;
  c.noise_sigma = noise;
  c.seed = seed;
  return c;
}

} // namespace

TEST_CASE("inversion at the first frame and rank one without motion")
{
  PhantomConfig c;
  c.nx = c.ny = 32;
  c.frames = 12;
  c.tissues = {{{0.0, 0.0, 0.35, 0.3, 0.2}, 0.9, 1.1, false}};
  auto const p = make_phantom(c);
  CHECK(p.x.shape() == Shape{32, 32, 12});
  CHECK(std::abs(p.x(16, 16, 0) - Cx{-0.9, 0.0}) <= 1e-6);
  CHECK(std::abs(p.x(16, 16, 5) - Cx{0.9 * ir_signal(1.1, 5 * c.tr), 0.0}) <= 1e-6);
  CHECK(p.phi.rank() == 1);
  CHECK(p.sv[1] <= 1e-10 * p.sv[0]);
  CHECK(rel(synthesize_frames(p.u_true, p.phi), p.x) <= 1e-12);
}

TEST_CASE("factorisation residual at the default truncation")
{
  PhantomConfig c;
  c.motion_amplitude = 0.3;
  c.frames = 24;
  auto const p = make_phantom(c);
  CHECK(p.phi.rank() >= 2);
  CHECK(rel(synthesize_frames(p.u_true, p.phi), p.x) <= 1e-4);
  CHECK(orthonormality_error(p.phi.array()) <= 1e-10);
  c.max_rank = 2;
  CHECK(make_phantom(c).phi.rank() == 2);

  c.tissues[1].shape.a = 0.0;
  CHECK_THROWS_AS(make_phantom(c), DataError);
}

TEST_CASE("coil maps")
{
  auto const one = make_coil_maps(1, 16, 16);
  for (auto v : one.maps.span()) {
    CHECK(std::abs(std::abs(v) - 1.0) <= 1e-12);
  }
  Index const n = 64, C = 8;
  auto const m = make_coil_maps(C, n, n);
  double grad = 0.0;
  for (Index p = 0; p < n * n; p++) {
    double s = 0.0;
    for (Index c = 0; c < C; c++) {
      s += std::norm(m.maps[c * n * n + p]);
    }
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
  for (Index c = 0; c < C; c++) {
    for (Index i = 0; i + 1 < n; i++) {
      for (Index j = 0; j + 1 < n; j++) {
        Cx const dx = m.maps(c, i + 1, j) - m.maps(c, i, j);
        Cx const dy = m.maps(c, i, j + 1) - m.maps(c, i, j);
        grad = std::max(grad, std::sqrt(std::norm(dx) + std::norm(dy)));
      }
    }
  }
  MESSAGE("largest map gradient ", grad);
  CHECK(grad <= 0.2);
  CHECK_THROWS_AS(make_coil_maps(0, 8, 8), UsageError);
}

TEST_CASE("noise-free simulation of a rank-L phantom matches the forward model")
{
  auto c = small_sim(0.0);
  auto const sim = simulate(c);
  auto const xl = synthesize_frames(sim.phantom.u_true, sim.phantom.phi);
  auto const b = simulate_acquisition(xl, sim.maps, sim.traj, sim.schedule, 0.0, 1, true);
  Encoding const E(sim.maps, sim.traj, sim.schedule, sim.phantom.phi, FourierMode::Exact);
  CHECK(rel(b.b, E.forward(sim.phantom.u_true).b) <= 1e-10);
  // gridded simulation stays close
  auto const g = simulate_acquisition(xl, sim.maps, sim.traj, sim.schedule, 0.0, 1, false);
  CHECK(rel(g.b, b.b) <= 1e-3);
  CHECK_THROWS_AS(simulate_acquisition(xl, make_coil_maps(2, 8, 8), sim.traj, sim.schedule, 0.0, 1), DataError);
}

TEST_CASE("noise level")
{
  auto const clean = simulate(small_sim(0.0));
  auto const noisy = simulate(small_sim(0.05));
  auto diff = noisy.b.b;
  la::axpy(-1.0, clean.b.b, diff);
  double const ratio = rms(diff) / rms(clean.b.b);
  MESSAGE("noise ratio ", ratio);
  CHECK(ratio == doctest::Approx(0.05).epsilon(0.1));
}

TEST_CASE("simulation is deterministic under a fixed seed")
{
  auto const a = simulate(small_sim(0.05, 9));
  auto const b = simulate(small_sim(0.05, 9));
  REQUIRE(a.b.b.size() == b.b.b.size());
  CHECK(std::memcmp(a.b.b.data(), b.b.b.data(), sizeof(Cx) * a.b.b.size()) == 0);
  auto const c = simulate(small_sim(0.05, 10));
  CHECK(rel(a.b.b, c.b.b) > 0.0);
}

TEST_CASE("more spokes never make the zero-filled estimate worse")
{
  double prev = std::numeric_limits<double>::infinity();
  for (Index rpf : {8, 16, 32, 64}) {
    auto c = small_sim(0.0);
    c.readouts_per_frame = rpf;
    Index const spokes = 4 * rpf;
    c.spokes = spokes;
    auto const sim = simulate(c);
    Encoding const E(sim.maps, sim.traj, sim.schedule, sim.phantom.phi, FourierMode::Exact);
    auto const u0 = zero_filled_init(E, sim.b, frame_quadrature_weights(sim.traj, sim.schedule));
    double const e = nrmse(u0.u, sim.phantom.u_true.u);
    MESSAGE(spokes, " spokes: NRMSE ", e);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("prior stand-ins")
{
  auto const u = SpatialFactor{testing::random_cx({8, 8, 3}, 1)};
  auto const p = noisy_prior(u, 10.0, 2);
  auto noise = p.u;
  la::axpy(-1.0, u.u, noise);
  CHECK(la::norm(u.u) / la::norm(noise) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(rel(noisy_prior(u, 10.0, 2).u, p.u) == 0.0);

  auto const flat = SpatialFactor{CxArray({8, 8, 2}, Cx{1.0, -2.0})};
  CHECK(rel(smooth_prior(flat, 1.5).u, flat.u) <= 1e-14);
  CHECK(rel(smooth_prior(u, 0.0).u, u.u) == 0.0);
  CHECK(la::norm(smooth_prior(u, 2.0).u) < la::norm(u.u));
  CHECK_THROWS_AS(noisy_prior(u, 0.0, 1), UsageError);
}
