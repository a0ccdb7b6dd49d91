#pragma once

#include "core.hpp"
#include "kernels.hpp"
#include "trajectory.hpp"

#include <memory>
#include <span>

namespace ncsub {

/*
 * Fourier machinery. Images are [nx][ny] or [nx][ny][channels]; sample blocks
 * are [M] or [M][channels] to match. The spatial origin is pixel (nx/2, ny/2),
 * so a centred delta has flat unit k-space.
 */

auto ndft_forward(CxArray const &image, std::span<KPoint const> coords) -> CxArray;
auto ndft_adjoint(CxArray const &samples, std::span<KPoint const> coords, Index nx, Index ny) -> CxArray;

// Centred 2-D FFT: x(r) with r relative to pixel n/2 -> X(p), p = bin - n/2.
auto centered_fft(CxArray const &image) -> CxArray;

struct GriddingOptions
{
  double oversampling = 2.0;
  Index width = 4;
};

/*
 * Kaiser-Bessel gridding geometry for one image size. The shape parameter
 * follows Beatty et al. for the chosen oversampling and width; the
 * deapodisation is the kernel's analytic Fourier transform.
 */
class GriddingPlan
{
public:
  GriddingPlan(Index nx, Index ny, GriddingOptions opts = {});

  auto nx() const -> Index { return nx_; }
  auto ny() const -> Index { return ny_; }
  auto grid_nx() const -> Index { return gx_; }
  auto grid_ny() const -> Index { return gy_; }
  auto width() const -> Index { return opts_.width; }
  auto oversampling() const -> double { return opts_.oversampling; }
  auto beta() const -> double { return beta_; }
  auto kernel(double d) const -> double;
  auto apodization() const -> RealArray const & { return apod_; }

  auto table(std::span<KPoint const> coords) const -> InterpTable;

private:
  Index nx_, ny_, gx_, gy_;
  GriddingOptions opts_;
  double beta_;
  RealArray apod_;
};

/*
 * A gridding NUFFT bound to fixed coordinates: forward maps an image stack to
 * samples, adjoint is its exact conjugate transpose.
 */
class Nufft
{
public:
  Nufft(std::shared_ptr<GriddingPlan const> plan, std::span<KPoint const> coords);

  auto forward(CxArray const &image) const -> CxArray;
  auto adjoint(CxArray const &samples) const -> CxArray;

  auto plan() const -> GriddingPlan const & { return *plan_; }
  auto table() const -> InterpTable const & { return table_; }
  auto n_samples() const -> Index { return table_.n_samples; }

private:
  std::shared_ptr<GriddingPlan const> plan_;
  InterpTable table_;
};

auto nufft_forward(GriddingPlan const &plan, CxArray const &image, std::span<KPoint const> coords) -> CxArray;
auto nufft_adjoint(GriddingPlan const &plan, CxArray const &samples, std::span<KPoint const> coords) -> CxArray;

// Z: centred embedding into a 2x grid; crop_center is Z^H.
auto zero_pad_embed(CxArray const &image) -> CxArray;
auto crop_center(CxArray const &padded) -> CxArray;

// Diagonal of Q on the 2x grid for one scalar weight set, [2nx][2ny].
struct ToeplitzDiagonal
{
  CxArray q;
  Index nx = 0;
  Index ny = 0;
};

/*
 * Toeplitz diagonals for several weight sets at once. weights is [M][P]; the
 * result is [2nx][2ny][P] with diagonal p built from weight column p. The
 * exact route evaluates the point-spread function by NDFT, the gridded route
 * by a NUFFT adjoint on the 2x grid.
 *
 * The point-spread function is only ever needed at displacements in
 * (-n, n); the unmatched Nyquist displacement -n is zeroed, which keeps q
 * Hermitian-consistent without touching the operator.
 */
auto psf_diagonals(std::span<KPoint const> coords, CxArray const &weights, Index nx, Index ny) -> CxArray;
auto psf_diagonals_gridded(std::span<KPoint const> coords, CxArray const &weights, Index nx, Index ny,
                           GriddingOptions opts = {}) -> CxArray;

auto psf_diagonal(std::span<KPoint const> coords, std::span<Cx const> weights, Index nx, Index ny)
  -> ToeplitzDiagonal;
auto psf_diagonal_gridded(std::span<KPoint const> coords, std::span<Cx const> weights, Index nx, Index ny,
                          GriddingOptions opts = {}) -> ToeplitzDiagonal;

// Z^H F^-1 (q . F Z x), channel by channel when x has a channel axis.
auto toeplitz_apply(CxArray const &x, ToeplitzDiagonal const &q) -> CxArray;

} // namespace ncsub
