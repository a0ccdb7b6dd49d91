#include "ncsub/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace ncsub {

Trajectory::Trajectory(Index n_readouts, Index n_samples, std::vector<KPoint> coords)
  : n_readouts_(n_readouts)
  , n_samples_(n_samples)
  , coords_(std::move(coords))
{
  if (n_readouts < 0 || n_samples < 1) { throw DataError("trajectory sizes must be positive"); }
  if (static_cast<Index>(coords_.size()) != n_readouts * n_samples) {
    throw DataError("trajectory coordinate count does not match readouts x samples");
  }
  for (auto const &k : coords_) {
    if (!(k.kx >= -0.5 && k.kx < 0.5 && k.ky >= -0.5 && k.ky < 0.5)) {
      throw DataError("trajectory coordinate outside [-0.5, 0.5)");
    }
  }
}

auto Trajectory::readout(Index m) const -> std::span<KPoint const>
{
  return std::span<KPoint const>(coords_).subspan(static_cast<std::size_t>(m * n_samples_),
                                                  static_cast<std::size_t>(n_samples_));
}

auto Trajectory::to_array() const -> RealArray
{
  RealArray a({n_readouts_, n_samples_, 2});
  for (std::size_t i = 0; i < coords_.size(); i++) {
    a[2 * i] = coords_[i].kx;
    a[2 * i + 1] = coords_[i].ky;
  }
  return a;
}

auto Trajectory::from_array(RealArray const &a) -> Trajectory
{
  if (a.rank() != 3 || a.dim(2) != 2) { throw DataError("trajectory tensor must be [readout, sample, 2]"); }
  std::vector<KPoint> c(static_cast<std::size_t>(a.dim(0) * a.dim(1)));
  for (std::size_t i = 0; i < c.size(); i++) {
    c[i] = {a[2 * i], a[2 * i + 1]};
  }
  return Trajectory(a.dim(0), a.dim(1), std::move(c));
}

SamplingSchedule::SamplingSchedule(std::vector<Index> times, Index n_frames)
  : time_index(std::move(times))
  , frames(n_frames)
{
  if (frames < 1) { throw DataError("schedule needs at least one frame"); }
  for (auto t : time_index) {
    if (t < 0 || t >= frames) {
      throw DataError("schedule time index " + std::to_string(t) + " outside [0, " + std::to_string(frames) + ")");
    }
  }
}

auto SamplingSchedule::readouts_per_frame() const -> std::vector<Index>
{
  std::vector<Index> n(static_cast<std::size_t>(frames), 0);
  for (auto t : time_index) {
    n[static_cast<std::size_t>(t)]++;
  }
  return n;
}

auto SamplingSchedule::to_array() const -> RealArray
{
  RealArray a({std::max<Index>(n_readouts(), 1)});
  for (Index m = 0; m < n_readouts(); m++) {
    a[m] = static_cast<double>(time_index[static_cast<std::size_t>(m)]);
  }
  return a;
}

auto SamplingSchedule::from_array(RealArray const &a, Index n_frames) -> SamplingSchedule
{
  if (a.rank() != 1) { throw DataError("schedule tensor must be one-dimensional"); }
  std::vector<Index> t(static_cast<std::size_t>(a.size()));
  for (Index m = 0; m < a.size(); m++) {
    if (a[m] != std::floor(a[m])) { throw DataError("schedule entries must be integers"); }
    t[static_cast<std::size_t>(m)] = static_cast<Index>(a[m]);
  }
  return SamplingSchedule(std::move(t), n_frames);
}

auto golden_angle_spokes(Index n_readouts, Index n_samples) -> Trajectory
{
  if (n_readouts < 1) { throw DataError("golden_angle_spokes: n_readouts must be >= 1"); }
  if (n_samples < 2 || n_samples % 2) { throw DataError("golden_angle_spokes: n_samples must be even and >= 2"); }
  double const dk = 1.0 / static_cast<double>(n_samples);
  std::vector<KPoint> c;
  c.reserve(static_cast<std::size_t>(n_readouts * n_samples));
  for (Index i = 0; i < n_readouts; i++) {
    double const theta = std::fmod(static_cast<double>(i) * kGoldenAngle, 2.0 * kPi);
    double const cs = std::cos(theta);
    double const sn = std::sin(theta);
    for (Index j = 0; j < n_samples; j++) {
      double const r = static_cast<double>(j - n_samples / 2) * dk;
      // r = -0.5 at some azimuths maps to +0.5 after rotation; fold to keep [-0.5, 0.5).
      auto fold = [](double v) { return v >= 0.5 ? v - 1.0 : v; };
      c.push_back({fold(r * cs), fold(r * sn)});
    }
  }
  return Trajectory(n_readouts, n_samples, std::move(c));
}

auto linear_schedule(Index n_readouts, Index readouts_per_frame) -> SamplingSchedule
{
  if (readouts_per_frame < 1) { throw DataError("linear_schedule: readouts_per_frame must be >= 1"); }
  if (n_readouts < 0) { throw DataError("linear_schedule: negative readout count"); }
  std::vector<Index> t(static_cast<std::size_t>(n_readouts));
  for (Index m = 0; m < n_readouts; m++) {
    t[static_cast<std::size_t>(m)] = m / readouts_per_frame;
  }
  Index const frames = std::max<Index>((n_readouts + readouts_per_frame - 1) / readouts_per_frame, 1);
  return SamplingSchedule(std::move(t), frames);
}

auto cartesian_rows(Index nx, Index ny, Index repeats) -> Trajectory
{
  if (nx < 1 || ny < 1 || repeats < 1) { throw DataError("cartesian_rows: sizes must be positive"); }
  std::vector<KPoint> c;
  c.reserve(static_cast<std::size_t>(repeats * nx * ny));
  for (Index r = 0; r < repeats; r++) {
    for (Index ix = 0; ix < nx; ix++) {
      for (Index iy = 0; iy < ny; iy++) {
        c.push_back({static_cast<double>(ix - nx / 2) / static_cast<double>(nx),
                     static_cast<double>(iy - ny / 2) / static_cast<double>(ny)});
      }
    }
  }
  return Trajectory(repeats * nx, ny, std::move(c));
}

auto is_radial(Trajectory const &traj, double tol) -> bool
{
  for (Index m = 0; m < traj.n_readouts(); m++) {
    auto const ro = traj.readout(m);
    auto const far = std::max_element(ro.begin(), ro.end(), [](KPoint const &a, KPoint const &b) {
      return std::hypot(a.kx, a.ky) < std::hypot(b.kx, b.ky);
    });
    double const r = std::hypot(far->kx, far->ky);
    if (r == 0.0) { continue; }
    for (auto const &k : ro) {
      // The fold of -0.5 onto the opposite edge breaks collinearity by exactly one
      // period; compare modulo that.
      double kx = k.kx, ky = k.ky;
      double cross = std::abs(far->kx * ky - far->ky * kx) / r;
      if (cross > tol) {
        if (std::abs(std::abs(kx) - 0.5) < tol) { kx = -kx; }
        if (std::abs(std::abs(ky) - 0.5) < tol) { ky = -ky; }
        cross = std::abs(far->kx * ky - far->ky * kx) / r;
      }
      if (cross > tol) { return false; }
    }
  }
  return true;
}

namespace {

// Radial sample spacing of one readout: distance between the first two samples.
auto radial_spacing(Trajectory const &traj) -> double
{
  if (traj.n_samples() < 2) { throw DataError("density compensation needs at least two samples per readout"); }
  auto const ro = traj.readout(0);
  return std::hypot(ro[1].kx - ro[0].kx, ro[1].ky - ro[0].ky);
}

auto raw_ramp(Trajectory const &traj) -> RealArray
{
  if (!is_radial(traj)) { throw DataError("ramp density compensation requires a radial trajectory"); }
  double const dk = radial_spacing(traj);
  RealArray w({traj.n_readouts(), traj.n_samples()});
  for (Index m = 0; m < traj.n_readouts(); m++) {
    for (Index j = 0; j < traj.n_samples(); j++) {
      auto const &k = traj.at(m, j);
      double const r = std::hypot(k.kx, k.ky);
      w(m, j) = r > 1e-12 ? r : dk / 4.0;
    }
  }
  return w;
}

} // namespace

auto ramp_density_comp(Trajectory const &traj) -> DensityWeights
{
  auto w = raw_ramp(traj);
  double mx = 0.0;
  for (auto v : w.span()) {
    mx = std::max(mx, v);
  }
  if (mx > 0.0) {
    for (auto &v : w.span()) {
      v *= 0.5 / mx;
    }
  }
  return {std::move(w)};
}

auto frame_quadrature_weights(Trajectory const &traj, SamplingSchedule const &schedule) -> DensityWeights
{
  if (schedule.n_readouts() != traj.n_readouts()) { throw DataError("schedule and trajectory readout counts differ"); }
  auto w = raw_ramp(traj);
  double const dk = radial_spacing(traj);
  auto const per_frame = schedule.readouts_per_frame();
  for (Index m = 0; m < traj.n_readouts(); m++) {
    double const s = dk * kPi / static_cast<double>(per_frame[static_cast<std::size_t>(schedule[m])]);
    for (Index j = 0; j < traj.n_samples(); j++) {
      w(m, j) *= s;
    }
  }
  return {std::move(w)};
}

} // namespace ncsub
