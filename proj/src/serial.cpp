#include "ncsub/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace ncsub::serial {

void ndft_forward(std::span<Cx const> image, Index nx, Index ny, Index channels, std::span<KPoint const> coords,
                  std::span<Cx> samples)
{
  std::fill(samples.begin(), samples.end(), Cx{});
  for (std::size_t m = 0; m < coords.size(); m++) {
    for (Index ix = 0; ix < nx; ix++) {
      for (Index iy = 0; iy < ny; iy++) {
        double const arg =
          coords[m].kx * static_cast<double>(ix - nx / 2) + coords[m].ky * static_cast<double>(iy - ny / 2);
        Cx const p = std::exp(Cx(0.0, -2.0 * kPi * arg));
        for (Index c = 0; c < channels; c++) {
          samples[m * channels + c] += image[(ix * ny + iy) * channels + c] * p;
        }
      }
    }
  }
}

void ndft_adjoint(std::span<Cx const> samples, std::span<KPoint const> coords, Index nx, Index ny, Index channels,
                  std::span<Cx> image)
{
  std::fill(image.begin(), image.end(), Cx{});
  for (std::size_t m = 0; m < coords.size(); m++) {
    for (Index ix = 0; ix < nx; ix++) {
      for (Index iy = 0; iy < ny; iy++) {
        double const arg =
          coords[m].kx * static_cast<double>(ix - nx / 2) + coords[m].ky * static_cast<double>(iy - ny / 2);
        Cx const p = std::exp(Cx(0.0, 2.0 * kPi * arg));
        for (Index c = 0; c < channels; c++) {
          image[(ix * ny + iy) * channels + c] += samples[m * channels + c] * p;
        }
      }
    }
  }
}

void interpolate(InterpTable const &t, std::span<Cx const> grid, Index channels, std::span<Cx> samples)
{
  std::fill(samples.begin(), samples.end(), Cx{});
  for (Index m = 0; m < t.n_samples; m++) {
    for (Index a = 0; a < t.width; a++) {
      for (Index b = 0; b < t.width; b++) {
        Index const gx = (t.base_x[m] + a) % t.grid_nx;
        Index const gy = (t.base_y[m] + b) % t.grid_ny;
        double const w = t.wx[m * t.width + a] * t.wy[m * t.width + b];
        for (Index c = 0; c < channels; c++) {
          samples[m * channels + c] += grid[(gx * t.grid_ny + gy) * channels + c] * w;
        }
      }
    }
  }
}

void spread(InterpTable const &t, std::span<Cx const> samples, Index channels, std::span<Cx> grid)
{
  std::fill(grid.begin(), grid.end(), Cx{});
  for (Index m = 0; m < t.n_samples; m++) {
    for (Index a = 0; a < t.width; a++) {
      for (Index b = 0; b < t.width; b++) {
        Index const gx = (t.base_x[m] + a) % t.grid_nx;
        Index const gy = (t.base_y[m] + b) % t.grid_ny;
        double const w = t.wx[m * t.width + a] * t.wy[m * t.width + b];
        for (Index c = 0; c < channels; c++) {
          grid[(gx * t.grid_ny + gy) * channels + c] += samples[m * channels + c] * w;
        }
      }
    }
  }
}

namespace {
using Mat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<Cx, Eigen::Dynamic, 1>;
} // namespace

void field_multiply(std::span<Cx const> field, Index L, std::span<Cx> data)
{
  Index const N = static_cast<Index>(data.size()) / L;
  for (Index n = 0; n < N; n++) {
    Eigen::Map<Mat const> W(field.data() + n * L * L, L, L);
    Eigen::Map<Vec> d(data.data() + n * L, L);
    Vec const out = W * d;
    d = out;
  }
}

void field_solve(std::span<Cx const> field, Index L, double lambda, std::span<Cx> data)
{
  Index const N = static_cast<Index>(data.size()) / L;
  for (Index n = 0; n < N; n++) {
    Eigen::Map<Mat const> W(field.data() + n * L * L, L, L);
    Eigen::Map<Vec> d(data.data() + n * L, L);
    Mat A = W;
    A.diagonal().array() += lambda;
    Vec const out = A.fullPivLu().solve(d);
    d = out;
  }
}

void spoke_right_multiply(std::span<Cx const> spoke_kernels, Index L, Index samples_per_spoke, std::span<Cx> samples)
{
  Index const S = static_cast<Index>(spoke_kernels.size()) / (L * L);
  for (Index s = 0; s < S; s++) {
    Eigen::Map<Mat const> K(spoke_kernels.data() + s * L * L, L, L);
    for (Index j = 0; j < samples_per_spoke; j++) {
      Eigen::Map<Eigen::Matrix<Cx, 1, Eigen::Dynamic>> z(samples.data() + (s * samples_per_spoke + j) * L, L);
      Eigen::Matrix<Cx, 1, Eigen::Dynamic> const out = z * K;
      z = out;
    }
  }
}

} // namespace ncsub::serial
