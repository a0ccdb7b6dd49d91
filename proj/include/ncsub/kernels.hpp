#pragma once

#include "core.hpp"
#include "trajectory.hpp"

#include <span>

namespace ncsub {

/*
 * Precomputed Kaiser-Bessel interpolation taps for one set of sample
 * coordinates on an oversampled grid. Taps for sample m along x cover grid
 * rows (base_x[m] + a) mod grid_nx, a = 0..width-1, likewise along y.
 *
 * The row index (CSR over grid rows) lets the adjoint gather instead of
 * scatter, so spreading parallelises over rows without atomics and the
 * summation order is fixed regardless of thread count.
 */
struct InterpTable
{
  Index grid_nx = 0;
  Index grid_ny = 0;
  Index width = 0;
  Index n_samples = 0;
  std::vector<Index> base_x, base_y;
  std::vector<double> wx, wy; // [sample][tap]
  std::vector<Index> row_start; // grid_nx + 1 entries
  std::vector<Index> row_sample, row_tap;
};

/*
 * Data-parallel (OpenMP) kernels behind the Fourier and kernel-field
 * operators. Images are [nx][ny][channels], sample blocks [M][channels],
 * kernel fields [locations][L][L]. Every kernel writes each output element
 * from exactly one thread, so results do not depend on the thread count.
 */
namespace kernels {

// s[m] = sum_r x(r) exp(-i 2 pi k_m . r), r relative to pixel (nx/2, ny/2).
void ndft_forward(std::span<Cx const> image, Index nx, Index ny, Index channels, std::span<KPoint const> coords,
                  std::span<Cx> samples);
void ndft_adjoint(std::span<Cx const> samples, std::span<KPoint const> coords, Index nx, Index ny, Index channels,
                  std::span<Cx> image);

void interpolate(InterpTable const &table, std::span<Cx const> grid, Index channels, std::span<Cx> samples);
// Overwrites grid with the adjoint of interpolate.
void spread(InterpTable const &table, std::span<Cx const> samples, Index channels, std::span<Cx> grid);

// data[n] <- W(n) data[n] for each location n.
void field_multiply(std::span<Cx const> field, Index L, std::span<Cx> data);
// data[n] <- (W(n) + lambda I)^-1 data[n]. Hermitian factorisation per location,
// falling back to pivoted LU where W(n) + lambda I is not positive definite.
// Returns the number of locations that needed the fallback.
auto field_solve(std::span<Cx const> field, Index L, double lambda, std::span<Cx> data) -> Index;

// samples[s][j] <- samples[s][j]^T K_s for each spoke s (row vector times L x L).
void spoke_right_multiply(std::span<Cx const> spoke_kernels, Index L, Index samples_per_spoke,
                          std::span<Cx> samples);

} // namespace kernels

/*
 * Serial reference implementations of the same kernels, written along
 * independent lines (direct phase evaluation, scatter instead of gather, a
 * library LU for the per-location solves). Kept for the parity tests and the
 * kernel benchmark.
 */
namespace serial {

void ndft_forward(std::span<Cx const> image, Index nx, Index ny, Index channels, std::span<KPoint const> coords,
                  std::span<Cx> samples);
void ndft_adjoint(std::span<Cx const> samples, std::span<KPoint const> coords, Index nx, Index ny, Index channels,
                  std::span<Cx> image);
void interpolate(InterpTable const &table, std::span<Cx const> grid, Index channels, std::span<Cx> samples);
void spread(InterpTable const &table, std::span<Cx const> samples, Index channels, std::span<Cx> grid);
void field_multiply(std::span<Cx const> field, Index L, std::span<Cx> data);
void field_solve(std::span<Cx const> field, Index L, double lambda, std::span<Cx> data);
void spoke_right_multiply(std::span<Cx const> spoke_kernels, Index L, Index samples_per_spoke,
                          std::span<Cx> samples);

} // namespace serial

} // namespace ncsub
