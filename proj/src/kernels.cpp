#include "ncsub/kernels.hpp"

#include <cmath>

namespace ncsub::kernels {

namespace {

inline auto phase(double angle) -> Cx { return {std::cos(angle), std::sin(angle)}; }

// In-place Cholesky A = C C^H of a Hermitian L x L block (lower triangle used).
// Returns false if a pivot is not strictly positive.
auto cholesky(Cx *a, Index L) -> bool
{
  for (Index j = 0; j < L; j++) {
    double d = a[j * L + j].real();
    for (Index k = 0; k < j; k++) {
      d -= std::norm(a[j * L + k]);
    }
    if (!(d > 0.0)) { return false; }
    double const djj = std::sqrt(d);
    a[j * L + j] = djj;
    for (Index i = j + 1; i < L; i++) {
      Cx s = a[i * L + j];
      for (Index k = 0; k < j; k++) {
        s -= a[i * L + k] * std::conj(a[j * L + k]);
      }
      a[i * L + j] = s / djj;
    }
  }
  return true;
}

void cholesky_solve(Cx const *c, Index L, Cx *x)
{
  for (Index i = 0; i < L; i++) {
    Cx s = x[i];
    for (Index k = 0; k < i; k++) {
      s -= c[i * L + k] * x[k];
    }
    x[i] = s / c[i * L + i].real();
  }
  for (Index i = L - 1; i >= 0; i--) {
    Cx s = x[i];
    for (Index k = i + 1; k < L; k++) {
      s -= std::conj(c[k * L + i]) * x[k];
    }
    x[i] = s / c[i * L + i].real();
  }
}

// Gaussian elimination with partial pivoting on a copy of the system.
auto lu_solve(Cx *a, Index L, Cx *x) -> bool
{
  for (Index col = 0; col < L; col++) {
    Index piv = col;
    for (Index r = col + 1; r < L; r++) {
      if (std::abs(a[r * L + col]) > std::abs(a[piv * L + col])) { piv = r; }
    }
    if (std::abs(a[piv * L + col]) == 0.0) { return false; }
    if (piv != col) {
      for (Index k = 0; k < L; k++) {
        std::swap(a[col * L + k], a[piv * L + k]);
      }
      std::swap(x[col], x[piv]);
    }
    for (Index r = col + 1; r < L; r++) {
      Cx const f = a[r * L + col] / a[col * L + col];
      for (Index k = col; k < L; k++) {
        a[r * L + k] -= f * a[col * L + k];
      }
      x[r] -= f * x[col];
    }
  }
  for (Index i = L - 1; i >= 0; i--) {
    Cx s = x[i];
    for (Index k = i + 1; k < L; k++) {
      s -= a[i * L + k] * x[k];
    }
    x[i] = s / a[i * L + i];
  }
  return true;
}

} // namespace

void ndft_forward(std::span<Cx const> image, Index nx, Index ny, Index channels, std::span<KPoint const> coords,
                  std::span<Cx> samples)
{
  Index const M = static_cast<Index>(coords.size());
#pragma omp parallel
  {
    std::vector<Cx> ex(static_cast<std::size_t>(nx)), ey(static_cast<std::size_t>(ny));
    std::vector<Cx> acc(static_cast<std::size_t>(channels));
#pragma omp for schedule(static)
    for (Index m = 0; m < M; m++) {
      auto const k = coords[static_cast<std::size_t>(m)];
      for (Index ix = 0; ix < nx; ix++) {
        ex[ix] = phase(-2.0 * kPi * k.kx * static_cast<double>(ix - nx / 2));
      }
      for (Index iy = 0; iy < ny; iy++) {
        ey[iy] = phase(-2.0 * kPi * k.ky * static_cast<double>(iy - ny / 2));
      }
      std::fill(acc.begin(), acc.end(), Cx{});
      for (Index ix = 0; ix < nx; ix++) {
        Cx const *row = image.data() + ix * ny * channels;
        for (Index iy = 0; iy < ny; iy++) {
          Cx const p = ex[ix] * ey[iy];
          for (Index c = 0; c < channels; c++) {
            acc[c] += row[iy * channels + c] * p;
          }
        }
      }
      for (Index c = 0; c < channels; c++) {
        samples[m * channels + c] = acc[c];
      }
    }
  }
}

void ndft_adjoint(std::span<Cx const> samples, std::span<KPoint const> coords, Index nx, Index ny, Index channels,
                  std::span<Cx> image)
{
  Index const M = static_cast<Index>(coords.size());
  std::vector<Cx> ey(static_cast<std::size_t>(M * ny));
  for (Index m = 0; m < M; m++) {
    for (Index iy = 0; iy < ny; iy++) {
      ey[m * ny + iy] = phase(2.0 * kPi * coords[m].ky * static_cast<double>(iy - ny / 2));
    }
  }
#pragma omp parallel for schedule(static)
  for (Index ix = 0; ix < nx; ix++) {
    Cx *row = image.data() + ix * ny * channels;
    std::fill(row, row + ny * channels, Cx{});
    double const rx = static_cast<double>(ix - nx / 2);
    for (Index m = 0; m < M; m++) {
      Cx const ex = phase(2.0 * kPi * coords[m].kx * rx);
      Cx const *s = samples.data() + m * channels;
      Cx const *eym = ey.data() + m * ny;
      for (Index iy = 0; iy < ny; iy++) {
        Cx const p = ex * eym[iy];
        for (Index c = 0; c < channels; c++) {
          row[iy * channels + c] += s[c] * p;
        }
      }
    }
  }
}

void interpolate(InterpTable const &t, std::span<Cx const> grid, Index channels, std::span<Cx> samples)
{
  Index const W = t.width;
#pragma omp parallel for schedule(static)
  for (Index m = 0; m < t.n_samples; m++) {
    Cx *out = samples.data() + m * channels;
    std::fill(out, out + channels, Cx{});
    for (Index a = 0; a < W; a++) {
      Index const gx = (t.base_x[m] + a) % t.grid_nx;
      double const wa = t.wx[m * W + a];
      for (Index b = 0; b < W; b++) {
        Index const gy = (t.base_y[m] + b) % t.grid_ny;
        double const w = wa * t.wy[m * W + b];
        Cx const *g = grid.data() + (gx * t.grid_ny + gy) * channels;
        for (Index c = 0; c < channels; c++) {
          out[c] += g[c] * w;
        }
      }
    }
  }
}

void spread(InterpTable const &t, std::span<Cx const> samples, Index channels, std::span<Cx> grid)
{
  Index const W = t.width;
#pragma omp parallel for schedule(static)
  for (Index gx = 0; gx < t.grid_nx; gx++) {
    Cx *row = grid.data() + gx * t.grid_ny * channels;
    std::fill(row, row + t.grid_ny * channels, Cx{});
    for (Index e = t.row_start[gx]; e < t.row_start[gx + 1]; e++) {
      Index const m = t.row_sample[e];
      double const wa = t.wx[m * W + t.row_tap[e]];
      Cx const *s = samples.data() + m * channels;
      for (Index b = 0; b < W; b++) {
        Index const gy = (t.base_y[m] + b) % t.grid_ny;
        double const w = wa * t.wy[m * W + b];
        Cx *g = row + gy * channels;
        for (Index c = 0; c < channels; c++) {
          g[c] += s[c] * w;
        }
      }
    }
  }
}

void field_multiply(std::span<Cx const> field, Index L, std::span<Cx> data)
{
  Index const N = static_cast<Index>(data.size()) / L;
#pragma omp parallel
  {
    std::vector<Cx> v(static_cast<std::size_t>(L));
#pragma omp for schedule(static)
    for (Index n = 0; n < N; n++) {
      Cx const *w = field.data() + n * L * L;
      Cx *d = data.data() + n * L;
      for (Index i = 0; i < L; i++) {
        Cx s{};
        for (Index j = 0; j < L; j++) {
          s += w[i * L + j] * d[j];
        }
        v[i] = s;
      }
      std::copy(v.begin(), v.end(), d);
    }
  }
}

auto field_solve(std::span<Cx const> field, Index L, double lambda, std::span<Cx> data) -> Index
{
  Index const N = static_cast<Index>(data.size()) / L;
  Index fallbacks = 0;
  bool singular = false;
#pragma omp parallel reduction(+ : fallbacks) reduction(|| : singular)
  {
    std::vector<Cx> a(static_cast<std::size_t>(L * L));
#pragma omp for schedule(static)
    for (Index n = 0; n < N; n++) {
      Cx const *w = field.data() + n * L * L;
      Cx *d = data.data() + n * L;
      std::copy(w, w + L * L, a.begin());
      for (Index i = 0; i < L; i++) {
        a[i * L + i] += lambda;
      }
      if (cholesky(a.data(), L)) {
        cholesky_solve(a.data(), L, d);
      } else {
        fallbacks++;
        std::copy(w, w + L * L, a.begin());
        for (Index i = 0; i < L; i++) {
          a[i * L + i] += lambda;
        }
        if (!lu_solve(a.data(), L, d)) { singular = true; }
      }
    }
  }
  if (singular) { throw NumericalError("singular L x L kernel system in field_solve"); }
  return fallbacks;
}

void spoke_right_multiply(std::span<Cx const> spoke_kernels, Index L, Index samples_per_spoke, std::span<Cx> samples)
{
  Index const S = static_cast<Index>(spoke_kernels.size()) / (L * L);
#pragma omp parallel
  {
    std::vector<Cx> v(static_cast<std::size_t>(L));
#pragma omp for schedule(static)
    for (Index s = 0; s < S; s++) {
      Cx const *K = spoke_kernels.data() + s * L * L;
      for (Index j = 0; j < samples_per_spoke; j++) {
        Cx *z = samples.data() + (s * samples_per_spoke + j) * L;
        for (Index i = 0; i < L; i++) {
          Cx acc{};
          for (Index r = 0; r < L; r++) {
            acc += z[r] * K[r * L + i];
          }
          v[i] = acc;
        }
        std::copy(v.begin(), v.end(), z);
      }
    }
  }
}

} // namespace ncsub::kernels
