#include "ncsub/transform.hpp"
#include "ncsub/trajectory.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace ncsub;

namespace {

auto azimuth(Trajectory const &t, Index m) -> double
{
  // last sample sits at +(S/2 - 1) dk along the spoke direction
  auto const &k = t.at(m, t.n_samples() - 1);
  return std::atan2(k.ky, k.kx);
}

} // namespace

TEST_CASE("golden-angle azimuths and radii")
{
  auto const t = golden_angle_spokes(3, 8);
  CHECK(t.at(0, 0).kx == doctest::Approx(-0.5));
  CHECK(t.at(0, 0).ky == doctest::Approx(0.0));
  CHECK(azimuth(t, 1) == doctest::Approx(1.941611).epsilon(1e-6));
  CHECK(azimuth(t, 1) * 180.0 / kPi == doctest::Approx(111.2461).epsilon(1e-6));
  double a2 = azimuth(t, 2);
  if (a2 < 0) { a2 += 2.0 * kPi; }
  CHECK(a2 * 180.0 / kPi == doctest::Approx(222.4922).epsilon(1e-6));
  for (Index j = 0; j < 8; j++) {
    auto const &k = t.at(1, j);
    CHECK(std::hypot(k.kx, k.ky) == doctest::Approx(std::abs(j - 4) / 8.0));
  }
  for (auto const &k : golden_angle_spokes(200, 16).coords()) {
    CHECK(k.kx >= -0.5);
    CHECK(k.kx < 0.5);
    CHECK(k.ky >= -0.5);
    CHECK(k.ky < 0.5);
  }
  CHECK(is_radial(golden_angle_spokes(50, 16)));
  CHECK_THROWS_AS(golden_angle_spokes(0, 8), DataError);
  CHECK_THROWS_AS(golden_angle_spokes(4, 7), DataError);
}

TEST_CASE("first 1000 golden-angle spokes are distinct modulo pi")
{
  std::vector<double> a;
  for (Index i = 0; i < 1000; i++) {
    a.push_back(std::fmod(static_cast<double>(i) * kGoldenAngle, kPi));
  }
  std::sort(a.begin(), a.end());
  double gap = kPi - a.back() + a.front();
  for (std::size_t i = 1; i < a.size(); i++) {
    gap = std::min(gap, a[i] - a[i - 1]);
  }
  CHECK(gap > 1e-6);
}

TEST_CASE("linear schedule")
{
  auto s = linear_schedule(4, 2);
  CHECK(s.time_index == std::vector<Index>{0, 0, 1, 1});
  CHECK(s.frames == 2);
  s = linear_schedule(5, 2);
  CHECK(s.time_index == std::vector<Index>{0, 0, 1, 1, 2});
  CHECK(s.frames == 3);
  s = linear_schedule(3, 1);
  CHECK(s.time_index == std::vector<Index>{0, 1, 2});
  CHECK(s.frames == 3);
  CHECK(s.readouts_per_frame() == std::vector<Index>{1, 1, 1});
  CHECK_THROWS_AS(linear_schedule(3, 0), DataError);
  CHECK_THROWS_AS(SamplingSchedule({0, 3}, 3), DataError);
  auto const back = SamplingSchedule::from_array(linear_schedule(5, 2).to_array(), 3);
  CHECK(back.time_index == std::vector<Index>{0, 0, 1, 1, 2});
}

TEST_CASE("ramp density compensation")
{
  // With 8 samples the largest radius is 0.5, so the final scaling is 1.
  auto const t = golden_angle_spokes(5, 8);
  auto const d = ramp_density_comp(t);
  CHECK(d.w(0, 2) == doctest::Approx(0.25));
  CHECK(d.w(0, 4) == doctest::Approx(1.0 / 32.0));
  double mx = 0.0;
  for (auto v : d.w.span()) {
    CHECK(v >= 0.0);
    mx = std::max(mx, v);
  }
  CHECK(mx == doctest::Approx(0.5));
  // weights depend only on |k|
  for (Index m = 1; m < 5; m++) {
    for (Index j = 0; j < 8; j++) {
      CHECK(d.w(m, j) == doctest::Approx(d.w(0, j)));
    }
  }

  // Scaling every radius by s scales the raw ramp (DC included) by s, which the
  // max normalisation removes.
  std::vector<KPoint> scaled;
  for (auto k : t.coords()) {
    scaled.push_back({0.6 * k.kx, 0.6 * k.ky});
  }
  auto const ds = ramp_density_comp(Trajectory(5, 8, scaled));
  for (Index i = 0; i < d.w.size(); i++) {
    CHECK(ds.w[i] == doctest::Approx(d.w[i]).epsilon(1e-12));
  }

  std::vector<KPoint> bent(t.coords().begin(), t.coords().end());
  bent[3].ky += 0.05;
  CHECK_THROWS_AS(ramp_density_comp(Trajectory(5, 8, bent)), DataError);
}

TEST_CASE("density-weighted adjoint recovers a smooth phantom")
{
  Index const n = 32, S = 2 * n, R = 2 * S; // readouts twice the image width
  CxArray x({n, n});
  for (Index i = 0; i < n; i++) {
    for (Index j = 0; j < n; j++) {
      double const dx = (i - n / 2) / 5.0, dy = (j - n / 2 + 2) / 4.0;
      x(i, j) = std::exp(-0.5 * (dx * dx + dy * dy));
    }
  }
  auto const t = golden_angle_spokes(R, S);
  auto const d = frame_quadrature_weights(t, linear_schedule(R, R));
  auto s = ndft_forward(x, t.coords());
  for (Index i = 0; i < s.size(); i++) {
    s[i] *= d.w[i];
  }
  auto const y = ndft_adjoint(s, t.coords(), n, n);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < x.size(); i++) {
    num += std::norm(y[i] - x[i]);
    den += std::norm(x[i]);
  }
  CHECK(std::sqrt(num / den) <= 0.05);
}

TEST_CASE("trajectory serialisation")
{
  auto const t = golden_angle_spokes(7, 6);
  auto const a = t.to_array();
  CHECK(a.shape() == Shape{7, 6, 2});
  auto const b = Trajectory::from_array(a);
  for (Index i = 0; i < 42; i++) {
    CHECK(b.coords()[i].kx == t.coords()[i].kx);
    CHECK(b.coords()[i].ky == t.coords()[i].ky);
  }
  CHECK_THROWS_AS(Trajectory(1, 2, {{0.5, 0.0}, {0.0, 0.0}}), DataError);
}
