#pragma once

#include "core.hpp"
#include "trajectory.hpp"
#include "transform.hpp"

#include <cstddef>

namespace ncsub {

/*
 * Orthonormal temporal basis, phi is [L][T]. Column t, phi(:, t), is the
 * subspace signature of frame t. Construction rejects bases whose rows are not
 * orthonormal to 1e-10 (Frobenius norm of phi phi^H - I).
 */
class TemporalBasis
{
public:
  TemporalBasis() = default;
  explicit TemporalBasis(CxArray phi, double tol = 1e-10);

  auto rank() const -> Index { return phi_.dim(0); }
  auto frames() const -> Index { return phi_.dim(1); }
  auto operator()(Index l, Index t) const -> Cx const & { return phi_(l, t); }
  auto array() const -> CxArray const & { return phi_; }

private:
  CxArray phi_;
};

auto orthonormality_error(CxArray const &phi) -> double;

// Inversion-recovery atoms 1 - 2 exp(-tau / T1), each normalised to unit l2
// norm. Result is [n_t1][n_tau].
auto ir_dictionary(std::span<double const> t1_values, std::span<double const> sample_times) -> RealArray;
auto ir_signal(double t1, double tau) -> double;

// Top-L right singular vectors of the dictionary, as rows.
auto basis_from_dictionary(RealArray const &dict, Index L) -> TemporalBasis;
// Singular values in descending order.
auto singular_values(RealArray const &dict) -> std::vector<double>;

/*
 * Which spoke geometry each readout uses. Golden-angle acquisitions never
 * repeat a spoke, so the identity map is the common case; repeated Cartesian
 * lines share one spoke.
 */
struct SpokeMap
{
  std::vector<Index> spoke_of;       // readout -> spoke
  std::vector<Index> representative; // spoke -> a readout carrying its coordinates

  auto n_spokes() const -> Index { return static_cast<Index>(representative.size()); }
};

auto identity_spokes(Index n_readouts) -> SpokeMap;
// Groups readouts with bit-identical coordinates.
auto group_spokes(Trajectory const &traj) -> SpokeMap;

// K_s = sum over readouts m on spoke s of phi(t_m) phi(t_m)^H, stored [S][L][L].
struct SpokeKernelSet
{
  CxArray kernels;
  SpokeMap spokes;

  auto rank() const -> Index { return kernels.dim(1); }
};

auto spoke_kernels(SamplingSchedule const &schedule, TemporalBasis const &phi, SpokeMap spokes) -> SpokeKernelSet;

/*
 * Block-Toeplitz kernel field: the L x L matrix W(n) at every location n of
 * the 2x-oversampled Cartesian grid, stored [2nx][2ny][L][L], with
 * W(n)_ij = q^(ij)_n the Toeplitz diagonal for readout weights
 * conj(phi_i(t_m)) phi_j(t_m). Storage is 4 nx ny L^2 entries and carries
 * no temporal axis.
 */
struct ToeplitzKernelField
{
  CxArray w;
  Index nx = 0;
  Index ny = 0;
  Index L = 0;

  auto locations() const -> Index { return 4 * nx * ny; }
  auto entries() const -> Index { return w.size(); }
  auto at(Index n) const -> std::span<Cx const> { return w.span().subspan(static_cast<std::size_t>(n * L * L), static_cast<std::size_t>(L * L)); }
  // Largest spectral norm of any W(n).
  auto max_norm() const -> double;
};

inline constexpr std::size_t kDefaultFieldBudget = std::size_t{2} << 30;

struct FieldOptions
{
  bool exact = false; // NDFT-built point-spread functions instead of gridded ones
  GriddingOptions gridding = {};
  std::size_t byte_budget = kDefaultFieldBudget;
};

auto toeplitz_block_kernels(Trajectory const &traj, SamplingSchedule const &schedule, TemporalBasis const &phi,
                            Index nx, Index ny, FieldOptions opts = {}) -> ToeplitzKernelField;

// y is [nx][ny][L]. field_apply returns Z^H F^-1 W(F Z y); field_inverse_apply
// returns Z^H F^-1 (W + lambda I)^-1 (F Z y).
auto field_apply(ToeplitzKernelField const &field, CxArray const &y) -> CxArray;
auto field_inverse_apply(ToeplitzKernelField const &field, double lambda, CxArray const &y) -> CxArray;

// Hermitian symmetry and eigenvalue diagnostics over all locations.
struct FieldDiagnostics
{
  double max_hermitian_error = 0.0; // max_n |W - W^H|_F / |W|_F
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};
auto diagnose(ToeplitzKernelField const &field) -> FieldDiagnostics;

} // namespace ncsub
