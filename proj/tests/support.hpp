#pragma once

#include "ncsub/encoding.hpp"
#include "ncsub/linalg.hpp"

#include <Eigen/Dense>

#include <random>

namespace testing {

using namespace ncsub;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline auto random_cx(Shape s, std::uint64_t seed) -> CxArray
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  CxArray a(std::move(s));
  for (auto &v : a.span()) {
    double const re = n(rng);
    v = {re, n(rng)};
  }
  return a;
}

inline auto random_real(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) -> RealArray
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealArray a(std::move(s));
  for (auto &v : a.span()) {
    v = u(rng);
  }
  return a;
}

// Random complex L x T basis with orthonormal rows.
inline auto random_basis(Index L, Index T, std::uint64_t seed) -> TemporalBasis
{
  auto const g = random_cx({T, L}, seed);
  Mat G(T, L);
  for (Index t = 0; t < T; t++) {
    for (Index l = 0; l < L; l++) {
      G(t, l) = g(t, l);
    }
  }
  Eigen::HouseholderQR<Mat> qr(G);
  Mat const Q = qr.householderQ() * Mat::Identity(T, L);
  CxArray phi({L, T});
  for (Index l = 0; l < L; l++) {
    for (Index t = 0; t < T; t++) {
      phi(l, t) = std::conj(Q(t, l));
    }
  }
  return TemporalBasis(std::move(phi));
}

inline auto random_schedule(Index R, Index T, std::uint64_t seed) -> SamplingSchedule
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> d(0, T - 1);
  std::vector<Index> t(static_cast<std::size_t>(R));
  for (auto &v : t) {
    v = d(rng);
  }
  return SamplingSchedule(std::move(t), T);
}

inline auto random_maps(Index C, Index nx, Index ny, std::uint64_t seed) -> CoilSensitivities
{
  return normalize_coil_maps(random_cx({C, nx, ny}, seed));
}

// Random coordinates in [-0.5, 0.5)^2.
inline auto random_coords(Index M, std::uint64_t seed) -> std::vector<KPoint>
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<KPoint> k(static_cast<std::size_t>(M));
  for (auto &p : k) {
    p.kx = u(rng);
    p.ky = u(rng);
  }
  return k;
}

inline auto to_vec(CxArray const &a) -> Vec
{
  Vec v(a.size());
  for (Index i = 0; i < a.size(); i++) {
    v[i] = a[i];
  }
  return v;
}

inline auto from_vec(Vec const &v, Shape s) -> CxArray
{
  CxArray a(std::move(s));
  for (Index i = 0; i < a.size(); i++) {
    a[i] = v[i];
  }
  return a;
}

inline auto rel(CxArray const &a, CxArray const &b) -> double { return la::rel_error(a, b); }

// exp(-i 2 pi k . r) with r relative to pixel (nx/2, ny/2).
inline auto phase(KPoint k, Index ix, Index iy, Index nx, Index ny) -> Cx
{
  double const a = -2.0 * kPi * (k.kx * static_cast<double>(ix - nx / 2) + k.ky * static_cast<double>(iy - ny / 2));
  return {std::cos(a), std::sin(a)};
}

/*
 * Dense matrix of the subspace forward model, written straight from its
 * definition: row (c, m, s), column (pixel, l), entry
 * phi_l(t_m) s_c(r) exp(-i 2 pi k_ms . r).
 */
inline auto dense_forward(Encoding const &E) -> Mat
{
  Index const C = E.maps().n_coils(), R = E.trajectory().n_readouts(), S = E.trajectory().n_samples();
  Index const nx = E.nx(), ny = E.ny(), L = E.rank();
  Mat A(C * R * S, nx * ny * L);
  for (Index c = 0; c < C; c++) {
    for (Index m = 0; m < R; m++) {
      Index const t = E.schedule()[m];
      for (Index s = 0; s < S; s++) {
        auto const k = E.trajectory().at(m, s);
        Index const row = (c * R + m) * S + s;
        for (Index ix = 0; ix < nx; ix++) {
          for (Index iy = 0; iy < ny; iy++) {
            Cx const e = E.maps().maps(c, ix, iy) * phase(k, ix, iy, nx, ny);
            for (Index l = 0; l < L; l++) {
              A(row, (ix * ny + iy) * L + l) = e * E.basis()(l, t);
            }
          }
        }
      }
    }
  }
  return A;
}

// Coil-wise forward for one coil (no sensitivity): row (m, s), column (pixel, l).
inline auto dense_single_forward(Encoding const &E) -> Mat
{
  Index const R = E.trajectory().n_readouts(), S = E.trajectory().n_samples();
  Index const nx = E.nx(), ny = E.ny(), L = E.rank();
  Mat A(R * S, nx * ny * L);
  for (Index m = 0; m < R; m++) {
    Index const t = E.schedule()[m];
    for (Index s = 0; s < S; s++) {
      auto const k = E.trajectory().at(m, s);
      for (Index ix = 0; ix < nx; ix++) {
        for (Index iy = 0; iy < ny; iy++) {
          Cx const e = phase(k, ix, iy, nx, ny);
          for (Index l = 0; l < L; l++) {
            A(m * S + s, (ix * ny + iy) * L + l) = e * E.basis()(l, t);
          }
        }
      }
    }
  }
  return A;
}

/*
 * The direct-solve chain Z^H F^-1 (W + lambda I)^-1 F Z for one coil as a
 * dense matrix, from first principles: W(n)_ij is the 2N-point DFT of the
 * point-spread function c_ij(d) = sum_m conj(phi_i(t_m)) phi_j(t_m) sum_s
 * exp(+i 2 pi k_ms . d) over displacements |d| < N (zero at d = -N).
 */
inline auto dense_ds_chain(Encoding const &E, double lambda) -> Mat
{
  Index const nx = E.nx(), ny = E.ny(), L = E.rank(), px = 2 * nx, py = 2 * ny;
  Index const R = E.trajectory().n_readouts(), S = E.trajectory().n_samples();
  Index const G = px * py;
  // PSF on centred displacements, stored by wrapped index.
  std::vector<Mat> c(static_cast<std::size_t>(G), Mat::Zero(L, L));
  for (Index dx = -nx + 1; dx < nx; dx++) {
    for (Index dy = -ny + 1; dy < ny; dy++) {
      Mat acc = Mat::Zero(L, L);
      for (Index m = 0; m < R; m++) {
        Index const t = E.schedule()[m];
        Cx e{};
        for (Index s = 0; s < S; s++) {
          auto const k = E.trajectory().at(m, s);
          double const a = 2.0 * kPi * (k.kx * static_cast<double>(dx) + k.ky * static_cast<double>(dy));
          e += Cx{std::cos(a), std::sin(a)};
        }
        for (Index i = 0; i < L; i++) {
          for (Index j = 0; j < L; j++) {
            acc(i, j) += std::conj(E.basis()(i, t)) * E.basis()(j, t) * e;
          }
        }
      }
      c[static_cast<std::size_t>(((dx + px) % px) * py + (dy + py) % py)] = acc;
    }
  }
  // W(n) = sum_d c(d) exp(-i 2 pi n . d / 2N)
  Mat Fm(G, G);
  for (Index a = 0; a < G; a++) {
    for (Index b = 0; b < G; b++) {
      double const ang = -2.0 * kPi *
                         (static_cast<double>((a / py) * (b / py)) / static_cast<double>(px) +
                          static_cast<double>((a % py) * (b % py)) / static_cast<double>(py));
      Fm(a, b) = {std::cos(ang), std::sin(ang)};
    }
  }
  Mat const Finv = Fm.adjoint() / static_cast<double>(G);
  // Block operator on [G][L] vectors (location-major): channel i of the
  // output at n is sum_j W(n)_ij y(n)_j.
  Mat Minv = Mat::Zero(G * L, G * L);
  for (Index n = 0; n < G; n++) {
    Mat Wn = Mat::Zero(L, L);
    for (Index d = 0; d < G; d++) {
      Wn += c[static_cast<std::size_t>(d)] * Fm(n, d);
    }
    Minv.block(n * L, n * L, L, L) = (Wn + lambda * Mat::Identity(L, L)).inverse();
  }
  // Kronecker with identity over channels.
  Mat FL = Mat::Zero(G * L, G * L), FiL = Mat::Zero(G * L, G * L);
  for (Index a = 0; a < G; a++) {
    for (Index b = 0; b < G; b++) {
      for (Index l = 0; l < L; l++) {
        FL(a * L + l, b * L + l) = Fm(a, b);
        FiL(a * L + l, b * L + l) = Finv(a, b);
      }
    }
  }
  // Z: pixel (ix, iy) -> padded (ix + nx/2, iy + ny/2).
  Mat Z = Mat::Zero(G * L, nx * ny * L);
  for (Index ix = 0; ix < nx; ix++) {
    for (Index iy = 0; iy < ny; iy++) {
      for (Index l = 0; l < L; l++) {
        Z(((ix + nx / 2) * py + iy + ny / 2) * L + l, (ix * ny + iy) * L + l) = 1.0;
      }
    }
  }
  return Z.transpose() * FiL * Minv * FL * Z;
}

// Direct 2-D Gaussian-weighted SSIM (11x11, sigma 1.5) at every valid window.
inline auto ssim_oracle(RealArray const &x, RealArray const &y, double dr) -> double
{
  Index const n0 = x.dim(0), n1 = x.dim(1), w = 11;
  double const s = 1.5;
  std::vector<double> g(w * w);
  double gs = 0.0;
  for (Index a = 0; a < w; a++) {
    for (Index b = 0; b < w; b++) {
      double const da = a - 5.0, db = b - 5.0;
      g[a * w + b] = std::exp(-(da * da + db * db) / (2.0 * s * s));
      gs += g[a * w + b];
    }
  }
  double const c1 = 0.01 * 0.01 * dr * dr, c2 = 0.03 * 0.03 * dr * dr;
  double total = 0.0;
  Index count = 0;
  for (Index i = 0; i + w <= n0; i++) {
    for (Index j = 0; j + w <= n1; j++) {
      double mx = 0, my = 0;
      for (Index a = 0; a < w; a++) {
        for (Index b = 0; b < w; b++) {
          mx += g[a * w + b] / gs * x(i + a, j + b);
          my += g[a * w + b] / gs * y(i + a, j + b);
        }
      }
      double vx = 0, vy = 0, cv = 0;
      for (Index a = 0; a < w; a++) {
        for (Index b = 0; b < w; b++) {
          double const wt = g[a * w + b] / gs;
          vx += wt * (x(i + a, j + b) - mx) * (x(i + a, j + b) - mx);
          vy += wt * (y(i + a, j + b) - my) * (y(i + a, j + b) - my);
          cv += wt * (x(i + a, j + b) - mx) * (y(i + a, j + b) - my);
        }
      }
      total += (2 * mx * my + c1) * (2 * cv + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      count++;
    }
  }
  return total / static_cast<double>(count);
}

} // namespace testing
