#pragma once

#include "core.hpp"
#include "subspace.hpp"
#include "trajectory.hpp"
#include "transform.hpp"

#include <memory>
#include <optional>

namespace ncsub {

// Per-coil complex sensitivities, [C][nx][ny], pixelwise normalised so that
// sum_c |s_c(r)|^2 = 1 wherever any map is nonzero. With that normalisation
// the pseudo-inverse coil combination equals the adjoint.
struct CoilSensitivities
{
  CxArray maps;

  CoilSensitivities() = default;
  explicit CoilSensitivities(CxArray maps, double tol = 1e-6);

  auto n_coils() const -> Index { return maps.dim(0); }
  auto nx() const -> Index { return maps.dim(1); }
  auto ny() const -> Index { return maps.dim(2); }
};

// Scales raw maps so sum_c |s_c|^2 = 1 per pixel (pixels where all maps vanish stay zero).
auto normalize_coil_maps(CxArray maps) -> CoilSensitivities;

// Subspace coordinates U, [nx][ny][L].
struct SpatialFactor
{
  CxArray u;

  auto nx() const -> Index { return u.dim(0); }
  auto ny() const -> Index { return u.dim(1); }
  auto rank() const -> Index { return u.dim(2); }
};

auto zeros_like(SpatialFactor const &u) -> SpatialFactor;

// Acquired samples, [C][readout][sample].
struct KTData
{
  CxArray b;

  auto n_coils() const -> Index { return b.dim(0); }
  auto n_readouts() const -> Index { return b.dim(1); }
  auto n_samples() const -> Index { return b.dim(2); }
};

// Coil factors Y = S U are [C][nx][ny][L].
auto apply_S(SpatialFactor const &u, CoilSensitivities const &maps) -> CxArray;
auto combine_S(CxArray const &y, CoilSensitivities const &maps) -> SpatialFactor;

enum class FourierMode
{
  Exact,    // NDFT, the oracle
  Gridding, // Kaiser-Bessel NUFFT
};

enum class NormalPath
{
  Direct,      // adjoint(forward(u))
  SpokeKernel, // per-spoke L x L kernels between NUFFT and adjoint NUFFT
  Toeplitz,    // block-Toeplitz kernel field on the 2x grid
};

auto to_string(NormalPath p) -> char const *;
auto parse_normal_path(std::string const &s) -> NormalPath;

/*
 * The subspace encoding A_phi(U) = Omega([F S U] phi) and its coil-wise
 * counterpart E_phi. Fourier sampling is evaluated only at acquired
 * (readout, frame) pairs, so no k-t mask exists anywhere.
 *
 * Kernels for the spoke-kernel and Toeplitz normal paths are built
 * explicitly by prepare(); after that the object is read-only and all
 * operators may be called concurrently.
 */
class Encoding
{
public:
  Encoding(CoilSensitivities maps, Trajectory traj, SamplingSchedule schedule, TemporalBasis phi,
           FourierMode mode = FourierMode::Gridding, GriddingOptions gridding = {});

  auto maps() const -> CoilSensitivities const & { return maps_; }
  auto trajectory() const -> Trajectory const & { return traj_; }
  auto schedule() const -> SamplingSchedule const & { return schedule_; }
  auto basis() const -> TemporalBasis const & { return phi_; }
  auto mode() const -> FourierMode { return mode_; }
  auto nx() const -> Index { return maps_.nx(); }
  auto ny() const -> Index { return maps_.ny(); }
  auto rank() const -> Index { return phi_.rank(); }

  void prepare_spoke_kernels(std::optional<SpokeMap> spokes = std::nullopt);
  void prepare_toeplitz(FieldOptions opts);
  void set_toeplitz_field(std::shared_ptr<ToeplitzKernelField const> field);
  auto has_spoke_kernels() const -> bool { return spoke_set_.has_value(); }
  auto has_toeplitz() const -> bool { return field_ != nullptr; }
  auto spoke_set() const -> SpokeKernelSet const &;
  auto field() const -> ToeplitzKernelField const &;

  // A_phi and its adjoint.
  auto forward(SpatialFactor const &u) const -> KTData;
  auto adjoint(KTData const &b) const -> SpatialFactor;
  auto normal(SpatialFactor const &u, NormalPath path) const -> SpatialFactor;

  // E_phi on coil factors [C][nx][ny][L], coil by coil.
  auto coil_forward(CxArray const &y) const -> KTData;
  auto coil_adjoint(KTData const &b) const -> CxArray;
  auto coil_normal(CxArray const &y, NormalPath path) const -> CxArray;
  // E_phi^* E_phi on a single coil's factor [nx][ny][L].
  auto single_normal(CxArray const &y, NormalPath path) const -> CxArray;

  // Density-compensated adjoint S^H F^H D Omega^*(b) phi^H.
  auto weighted_adjoint(KTData const &b, DensityWeights const &d) const -> SpatialFactor;

private:
  class Fourier;

  void check_factor(SpatialFactor const &u) const;
  void check_data(KTData const &b) const;
  auto single_forward(CxArray const &y) const -> CxArray;                         // [R][S] for one coil
  auto single_adjoint(Cx const *b, double const *weights) const -> CxArray;        // [nx][ny][L]

  CoilSensitivities maps_;
  Trajectory traj_;
  SamplingSchedule schedule_;
  TemporalBasis phi_;
  FourierMode mode_;
  GriddingOptions gridding_;
  std::shared_ptr<Fourier const> readouts_;
  std::shared_ptr<Fourier const> spokes_;
  std::optional<SpokeKernelSet> spoke_set_;
  std::shared_ptr<ToeplitzKernelField const> field_;
};

} // namespace ncsub
