#pragma once

#include "encoding.hpp"

#include <cstdint>

namespace ncsub {

// Centre and semi-axes as fractions of the field of view, angle in radians.
struct Ellipse
{
  double cx = 0.0;
  double cy = 0.0;
  double a = 0.1;
  double b = 0.1;
  double angle = 0.0;
};

struct Tissue
{
  Ellipse shape;
  double pd = 1.0; // proton density
  double t1 = 1.0; // seconds
  bool moves = false;
};

auto default_tissues() -> std::vector<Tissue>;

struct PhantomConfig
{
  Index nx = 32;
  Index ny = 32;
  Index frames = 16;
  std::vector<Tissue> tissues = default_tissues();
  double motion_amplitude = 0.0; // peak centre shift, as a fraction of the ellipse semi-axis
  double motion_period = 8.0;    // frames per cycle
  double tr = 0.1;               // seconds per frame
  double edge_width = 0.75;      // pixels of smooth ellipse edge
  std::uint64_t seed = 0;        // jitters T1 and ellipse centres; 0 disables jitter
  Index max_rank = 0;            // caps L when > 0
  double energy = 1.0 - 1e-8;    // retained fraction of the squared Frobenius norm

  void validate() const;
};

struct Phantom
{
  CxArray x;               // [nx][ny][T]
  SpatialFactor u_true;    // [nx][ny][L]
  TemporalBasis phi;       // [L][T]
  std::vector<double> sv;  // singular values of X, descending
};

// X as a [pixels][T] matrix factorised by SVD; phi keeps the leading right
// singular vectors, U = X phi^H.
auto make_phantom(PhantomConfig const &cfg) -> Phantom;
auto factorize_frames(CxArray const &x, double energy, Index max_rank) -> Phantom;

// Gaussian lobes centred on a ring at the border with a mild linear phase,
// normalised pixelwise.
auto make_coil_maps(Index n_coils, Index nx, Index ny) -> CoilSensitivities;

/*
 * Samples of the frames X at each readout's coordinates and frame, per coil,
 * by NDFT (exact) or gridding, plus circular complex Gaussian noise with
 * standard deviation noise_sigma * RMS(clean samples). Readout m draws its
 * noise from a stream seeded by (seed, m).
 */
auto simulate_acquisition(CxArray const &x, CoilSensitivities const &maps, Trajectory const &traj,
                          SamplingSchedule const &schedule, double noise_sigma, std::uint64_t seed,
                          bool exact = true) -> KTData;

// Frames U phi, [nx][ny][T].
auto synthesize_frames(SpatialFactor const &u, TemporalBasis const &phi) -> CxArray;

// Prior stand-ins for a learned U_cnn.
// U_true + noise scaled so |U_true| / |noise| = snr.
auto noisy_prior(SpatialFactor const &u_true, double snr, std::uint64_t seed) -> SpatialFactor;
// Gaussian blur of each channel, clamped borders.
auto smooth_prior(SpatialFactor const &u, double sigma) -> SpatialFactor;

// The whole synthetic set-up in one call.
struct SimConfig
{
  PhantomConfig phantom;
  Index coils = 4;
  Index spokes = 64;
  Index samples = 64;
  Index readouts_per_frame = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  bool exact = true;
};

struct Simulation
{
  Phantom phantom;
  CoilSensitivities maps;
  Trajectory traj;
  SamplingSchedule schedule;
  KTData b;
};

// The phantom frame count is taken from the schedule.
auto simulate(SimConfig cfg) -> Simulation;

} // namespace ncsub
