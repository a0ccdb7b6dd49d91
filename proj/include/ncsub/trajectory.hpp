#pragma once

#include "core.hpp"

#include <span>

namespace ncsub {

// k-space location in cycles/pixel.
struct KPoint
{
  double kx = 0.0;
  double ky = 0.0;
};

// Radial golden-angle increment pi / phi = pi (sqrt(5) - 1) / 2, about 111.246
// degrees. Spokes are lines through the origin, so azimuths repeat modulo pi.
inline constexpr double kGoldenAngle = kPi * (2.2360679774997896964091736687313 - 1.0) / 2.0;

/*
 * Readout-indexed sample coordinates, [readout][sample]. Every component lies
 * in [-0.5, 0.5) so on-grid frequencies fall exactly on FFT bins.
 */
class Trajectory
{
public:
  Trajectory() = default;
  Trajectory(Index n_readouts, Index n_samples, std::vector<KPoint> coords);

  auto n_readouts() const -> Index { return n_readouts_; }
  auto n_samples() const -> Index { return n_samples_; }
  auto coords() const -> std::span<KPoint const> { return coords_; }
  auto readout(Index m) const -> std::span<KPoint const>;
  auto at(Index m, Index j) const -> KPoint const & { return coords_[static_cast<std::size_t>(m * n_samples_ + j)]; }

  // [readout, sample, 2] real array, the serialised layout.
  auto to_array() const -> RealArray;
  static auto from_array(RealArray const &a) -> Trajectory;

private:
  Index n_readouts_ = 0;
  Index n_samples_ = 0;
  std::vector<KPoint> coords_;
};

// Readout -> temporal frame assignment.
struct SamplingSchedule
{
  std::vector<Index> time_index;
  Index frames = 0;

  SamplingSchedule() = default;
  SamplingSchedule(std::vector<Index> times, Index n_frames);

  auto n_readouts() const -> Index { return static_cast<Index>(time_index.size()); }
  auto operator[](Index m) const -> Index { return time_index[static_cast<std::size_t>(m)]; }
  // Number of readouts acquired in each frame.
  auto readouts_per_frame() const -> std::vector<Index>;

  auto to_array() const -> RealArray;
  static auto from_array(RealArray const &a, Index frames) -> SamplingSchedule;
};

// Per-sample density compensation, [readout][sample], nonnegative.
struct DensityWeights
{
  RealArray w;
};

auto golden_angle_spokes(Index n_readouts, Index n_samples) -> Trajectory;
auto linear_schedule(Index n_readouts, Index readouts_per_frame) -> SamplingSchedule;

// Full Cartesian coverage: one readout per row of integer bins (kx fixed), the
// whole grid repeated `repeats` times. Readout m covers row m % nx.
auto cartesian_rows(Index nx, Index ny, Index repeats = 1) -> Trajectory;

// True if every readout is a straight line through k = 0.
auto is_radial(Trajectory const &traj, double tol = 1e-9) -> bool;

/*
 * Ramp density compensation w(k) = |k|. The DC sample, which would otherwise
 * get zero weight, takes the limit of the central annulus area, dk/4, with dk
 * the radial sample spacing. The weights are then scaled so max(w) = 0.5.
 */
auto ramp_density_comp(Trajectory const &traj) -> DensityWeights;

/*
 * Scales ramp weights into radial quadrature weights |k| * dk * pi / S_t, where
 * S_t is the number of readouts in the readout's frame. With these, the
 * weighted adjoint of the forward transform approximates the identity within
 * every frame.
 */
auto frame_quadrature_weights(Trajectory const &traj, SamplingSchedule const &schedule) -> DensityWeights;

} // namespace ncsub
