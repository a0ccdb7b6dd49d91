#pragma once

#include "encoding.hpp"

#include <functional>

namespace ncsub {

struct DCConfig
{
  double alpha = 0.0;  // GD / PGD step
  double lambda = 0.0; // DS / CG regularisation
  Index cg_iters = 5;
  NormalPath normal_path = NormalPath::Direct;

  void validate() const;
};

// Cartesian k-space ramp, [nx][ny] in centred bin order: entry (ix, iy) is
// frequency ((ix - nx/2) / nx, (iy - ny/2) / ny) in cycles/pixel.
struct Preconditioner
{
  RealArray ramp;
};

// Half the smallest nonzero frequency bin.
auto default_ramp_epsilon(Index nx, Index ny) -> double;
auto build_ramp_preconditioner(Index nx, Index ny, double epsilon) -> Preconditioner;
auto build_ramp_preconditioner(Index nx, Index ny) -> Preconditioner;

// F^-1 diag(ramp) F on each channel of [..., nx, ny, L], in place.
void apply_preconditioner(Preconditioner const &p, CxArray &y);

// U0 = S^H F^H D Omega^*(b) phi^H.
auto zero_filled_init(Encoding const &E, KTData const &b, DensityWeights const &d) -> SpatialFactor;

// U_cnn - alpha [A^*A U_cnn - A^* b]
auto gd_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> SpatialFactor;

// U_cnn - alpha S^H P [E^*E (S U_cnn) - E^* b]
auto pgd_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg,
            Preconditioner const &p) -> SpatialFactor;

/*
 * Coil-wise direct solve through the prepared kernel field:
 * Y_c = Z^H F^-1 (W + lambda I)^-1 F Z [E^*(b)_c + lambda s_c U_cnn].
 * ds_dc_coils returns the coil factors Y, ds_dc their combination.
 */
auto ds_dc_coils(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> CxArray;
auto ds_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> SpatialFactor;

// cfg.cg_iters iterations of CG on (A^*A + lambda I) U = A^* b + lambda U_cnn,
// started at U_cnn. Returns the last iterate.
auto cg_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> SpatialFactor;

// Generic CG on (N + shift I) x = rhs from x0, fixed iteration count.
auto conjugate_gradient(std::function<CxArray(CxArray const &)> const &normal, double shift, CxArray const &rhs,
                        CxArray x0, Index iters) -> CxArray;

// |b - A U|^2 + lambda |U - U_cnn|^2
auto dc_objective(Encoding const &E, SpatialFactor const &u, KTData const &b, SpatialFactor const &u_cnn,
                  double lambda) -> double;
// Coil-wise version on Y [C][nx][ny][L]: |E Y - b|^2 + lambda |Y - S U_cnn|^2
auto coil_dc_objective(Encoding const &E, CxArray const &y, KTData const &b, SpatialFactor const &u_cnn,
                       double lambda) -> double;
// |A U - b|
auto residual_norm(Encoding const &E, SpatialFactor const &u, KTData const &b) -> double;

// Largest eigenvalue of A^*A by power iteration from a fixed start vector.
auto estimate_normal_norm(Encoding const &E, NormalPath path = NormalPath::Direct, Index iters = 10) -> double;

// Step and regularisation grids scaled by the operator norm estimate.
auto alpha_grid(double normal_norm) -> std::vector<double>;
auto lambda_grid(double normal_norm) -> std::vector<double>;

// Grid value with the smallest loss; ties keep the first.
auto tune(std::vector<double> const &grid, std::function<double(double)> const &loss) -> double;

// Orthogonal single-level 2D Haar transform on each channel of [nx][ny][L].
// Coefficients are stored in quadrants: LL top-left, then the detail bands.
auto haar_forward(CxArray const &u) -> CxArray;
auto haar_inverse(CxArray const &w) -> CxArray;

// Complex shrinkage: magnitude reduced by tau, phase kept.
auto soft_threshold(Cx z, double tau) -> Cx;
auto soft_threshold(double x, double tau) -> double;

struct AdmmConfig
{
  double lambda_w = 0.0;
  double rho = 1.0;
  Index n_iters = 20;
  Index inner_iters = 10;
  NormalPath normal_path = NormalPath::Direct;
};

// Minimises 1/2 |A U - b|^2 + lambda_w |Haar U|_1 by scaled ADMM from u0.
auto admm_wavelet_recon(Encoding const &E, KTData const &b, SpatialFactor const &u0, AdmmConfig const &cfg)
  -> SpatialFactor;
auto admm_objective(Encoding const &E, SpatialFactor const &u, KTData const &b, double lambda_w) -> double;

} // namespace ncsub
