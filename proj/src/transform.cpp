#include "ncsub/transform.hpp"
#include "ncsub/fft.hpp"

#include <cmath>

namespace ncsub {

namespace {

struct ImageDims
{
  Index nx, ny, channels;
};

auto image_dims(CxArray const &a) -> ImageDims
{
  if (a.rank() == 2) { return {a.dim(0), a.dim(1), 1}; }
  if (a.rank() == 3) { return {a.dim(0), a.dim(1), a.dim(2)}; }
  throw DataError("expected an image [nx, ny] or [nx, ny, channels], got " + shape_string(a.shape()));
}

auto sample_channels(CxArray const &s, Index M) -> Index
{
  if (s.rank() == 1 && s.dim(0) == M) { return 1; }
  if (s.rank() == 2 && s.dim(0) == M) { return s.dim(1); }
  throw DataError("sample block " + shape_string(s.shape()) + " does not match " + std::to_string(M) +
                  " coordinates");
}

auto image_shape(Index nx, Index ny, Index channels, bool with_channels) -> Shape
{
  return with_channels ? Shape{nx, ny, channels} : Shape{nx, ny};
}

auto sample_shape(Index M, Index channels, bool with_channels) -> Shape
{
  return with_channels ? Shape{M, channels} : Shape{M};
}

void check_coords(std::span<KPoint const> coords)
{
  for (auto const &k : coords) {
    if (!(k.kx >= -0.5 && k.kx < 0.5 && k.ky >= -0.5 && k.ky < 0.5)) {
      throw DataError("k-space coordinate outside [-0.5, 0.5)");
    }
  }
}

inline auto wrap(Index i, Index n) -> Index { return ((i % n) + n) % n; }

auto even_ceil(double v) -> Index
{
  auto n = static_cast<Index>(std::ceil(v - 1e-9));
  return n + (n % 2);
}

} // namespace

auto ndft_forward(CxArray const &image, std::span<KPoint const> coords) -> CxArray
{
  auto const d = image_dims(image);
  check_coords(coords);
  Index const M = static_cast<Index>(coords.size());
  CxArray out(sample_shape(M, d.channels, image.rank() == 3));
  kernels::ndft_forward(image.span(), d.nx, d.ny, d.channels, coords, out.span());
  return out;
}

auto ndft_adjoint(CxArray const &samples, std::span<KPoint const> coords, Index nx, Index ny) -> CxArray
{
  Index const M = static_cast<Index>(coords.size());
  Index const ch = M == 0 && samples.rank() == 2 ? samples.dim(1) : (M == 0 ? 1 : sample_channels(samples, M));
  check_coords(coords);
  CxArray out(image_shape(nx, ny, ch, samples.rank() == 2));
  kernels::ndft_adjoint(samples.span(), coords, nx, ny, ch, out.span());
  return out;
}

auto centered_fft(CxArray const &image) -> CxArray
{
  auto const d = image_dims(image);
  CxArray work(image.shape());
  // ifftshift, FFT, fftshift
  for (Index ix = 0; ix < d.nx; ix++) {
    for (Index iy = 0; iy < d.ny; iy++) {
      Index const sx = wrap(ix - d.nx / 2, d.nx);
      Index const sy = wrap(iy - d.ny / 2, d.ny);
      for (Index c = 0; c < d.channels; c++) {
        work[(sx * d.ny + sy) * d.channels + c] = image[(ix * d.ny + iy) * d.channels + c];
      }
    }
  }
  fft::forward(work.data(), d.nx, d.ny, d.channels);
  CxArray out(image.shape());
  for (Index px = 0; px < d.nx; px++) {
    for (Index py = 0; py < d.ny; py++) {
      Index const sx = wrap(px - d.nx / 2, d.nx);
      Index const sy = wrap(py - d.ny / 2, d.ny);
      for (Index c = 0; c < d.channels; c++) {
        out[(px * d.ny + py) * d.channels + c] = work[(sx * d.ny + sy) * d.channels + c];
      }
    }
  }
  return out;
}

GriddingPlan::GriddingPlan(Index nx, Index ny, GriddingOptions opts)
  : nx_(nx)
  , ny_(ny)
  , opts_(opts)
{
  if (nx < 2 || ny < 2 || nx % 2 || ny % 2) { throw DataError("gridding plan needs even image sizes >= 2"); }
  if (!(opts.oversampling >= 1.25)) { throw DataError("gridding oversampling must be >= 1.25"); }
  if (opts.width < 2) { throw DataError("gridding kernel width must be >= 2"); }
  gx_ = even_ceil(opts.oversampling * static_cast<double>(nx));
  gy_ = even_ceil(opts.oversampling * static_cast<double>(ny));
  double const W = static_cast<double>(opts.width);
  double const s = opts.oversampling;
  beta_ = kPi * std::sqrt(W * W / (s * s) * (s - 0.5) * (s - 0.5) - 0.8);

  auto apod1 = [&](Index r, Index G) {
    double const u = static_cast<double>(r) / static_cast<double>(G);
    double const z2 = beta_ * beta_ - std::pow(kPi * W * u, 2);
    if (z2 > 1e-12) {
      double const z = std::sqrt(z2);
      return W * std::sinh(z) / z;
    }
    if (z2 < -1e-12) {
      double const z = std::sqrt(-z2);
      return W * std::sin(z) / z;
    }
    return W;
  };
  apod_ = RealArray({nx, ny});
  for (Index ix = 0; ix < nx; ix++) {
    double const ax = apod1(ix - nx / 2, gx_);
    for (Index iy = 0; iy < ny; iy++) {
      apod_(ix, iy) = ax * apod1(iy - ny / 2, gy_);
    }
  }
  for (auto v : apod_.span()) {
    if (!(v > 0.0)) { throw NumericalError("gridding deapodisation is not strictly positive"); }
  }
}

auto GriddingPlan::kernel(double d) const -> double
{
  double const half = static_cast<double>(opts_.width) / 2.0;
  if (std::abs(d) > half) { return 0.0; }
  double const t = d / half;
  return std::cyl_bessel_i(0.0, beta_ * std::sqrt(std::max(0.0, 1.0 - t * t)));
}

auto GriddingPlan::table(std::span<KPoint const> coords) const -> InterpTable
{
  check_coords(coords);
  InterpTable t;
  Index const W = opts_.width;
  t.grid_nx = gx_;
  t.grid_ny = gy_;
  t.width = W;
  t.n_samples = static_cast<Index>(coords.size());
  t.base_x.resize(coords.size());
  t.base_y.resize(coords.size());
  t.wx.resize(coords.size() * W);
  t.wy.resize(coords.size() * W);
  double const half = static_cast<double>(W) / 2.0;
  for (std::size_t m = 0; m < coords.size(); m++) {
    double const cx = coords[m].kx * static_cast<double>(gx_);
    double const cy = coords[m].ky * static_cast<double>(gy_);
    auto const x0 = static_cast<Index>(std::floor(cx - half)) + 1;
    auto const y0 = static_cast<Index>(std::floor(cy - half)) + 1;
    t.base_x[m] = wrap(x0, gx_);
    t.base_y[m] = wrap(y0, gy_);
    for (Index a = 0; a < W; a++) {
      t.wx[m * W + a] = kernel(cx - static_cast<double>(x0 + a));
      t.wy[m * W + a] = kernel(cy - static_cast<double>(y0 + a));
    }
  }
  // CSR of (sample, tap) per grid row, in sample order.
  t.row_start.assign(static_cast<std::size_t>(gx_ + 1), 0);
  for (Index m = 0; m < t.n_samples; m++) {
    for (Index a = 0; a < W; a++) {
      t.row_start[(t.base_x[m] + a) % gx_ + 1]++;
    }
  }
  for (Index g = 0; g < gx_; g++) {
    t.row_start[g + 1] += t.row_start[g];
  }
  t.row_sample.resize(static_cast<std::size_t>(t.n_samples * W));
  t.row_tap.resize(static_cast<std::size_t>(t.n_samples * W));
  std::vector<Index> fill(t.row_start.begin(), t.row_start.end() - 1);
  for (Index m = 0; m < t.n_samples; m++) {
    for (Index a = 0; a < W; a++) {
      Index const g = (t.base_x[m] + a) % gx_;
      t.row_sample[fill[g]] = m;
      t.row_tap[fill[g]] = a;
      fill[g]++;
    }
  }
  return t;
}

Nufft::Nufft(std::shared_ptr<GriddingPlan const> plan, std::span<KPoint const> coords)
  : plan_(std::move(plan))
  , table_(plan_->table(coords))
{
}

auto Nufft::forward(CxArray const &image) const -> CxArray
{
  auto const d = image_dims(image);
  auto const &p = *plan_;
  if (d.nx != p.nx() || d.ny != p.ny()) {
    throw DataError("image " + shape_string(image.shape()) + " does not match gridding plan");
  }
  auto const &apod = p.apodization();
  CxArray grid({p.grid_nx(), p.grid_ny(), d.channels});
  for (Index ix = 0; ix < d.nx; ix++) {
    Index const gx = wrap(ix - d.nx / 2, p.grid_nx());
    for (Index iy = 0; iy < d.ny; iy++) {
      Index const gy = wrap(iy - d.ny / 2, p.grid_ny());
      double const a = 1.0 / apod(ix, iy);
      for (Index c = 0; c < d.channels; c++) {
        grid[(gx * p.grid_ny() + gy) * d.channels + c] = image[(ix * d.ny + iy) * d.channels + c] * a;
      }
    }
  }
  fft::forward(grid.data(), p.grid_nx(), p.grid_ny(), d.channels);
  CxArray out(sample_shape(table_.n_samples, d.channels, image.rank() == 3));
  kernels::interpolate(table_, grid.span(), d.channels, out.span());
  return out;
}

auto Nufft::adjoint(CxArray const &samples) const -> CxArray
{
  auto const &p = *plan_;
  Index const ch = sample_channels(samples, table_.n_samples);
  CxArray grid({p.grid_nx(), p.grid_ny(), ch});
  kernels::spread(table_, samples.span(), ch, grid.span());
  fft::inverse(grid.data(), p.grid_nx(), p.grid_ny(), ch);
  auto const &apod = p.apodization();
  CxArray out(image_shape(p.nx(), p.ny(), ch, samples.rank() == 2));
  for (Index ix = 0; ix < p.nx(); ix++) {
    Index const gx = wrap(ix - p.nx() / 2, p.grid_nx());
    for (Index iy = 0; iy < p.ny(); iy++) {
      Index const gy = wrap(iy - p.ny() / 2, p.grid_ny());
      double const a = 1.0 / apod(ix, iy);
      for (Index c = 0; c < ch; c++) {
        out[(ix * p.ny() + iy) * ch + c] = grid[(gx * p.grid_ny() + gy) * ch + c] * a;
      }
    }
  }
  return out;
}

auto nufft_forward(GriddingPlan const &plan, CxArray const &image, std::span<KPoint const> coords) -> CxArray
{
  return Nufft(std::make_shared<GriddingPlan const>(plan), coords).forward(image);
}

auto nufft_adjoint(GriddingPlan const &plan, CxArray const &samples, std::span<KPoint const> coords) -> CxArray
{
  return Nufft(std::make_shared<GriddingPlan const>(plan), coords).adjoint(samples);
}

auto zero_pad_embed(CxArray const &image) -> CxArray
{
  auto const d = image_dims(image);
  Index const px = 2 * d.nx, py = 2 * d.ny;
  CxArray out(image_shape(px, py, d.channels, image.rank() == 3));
  Index const ox = d.nx / 2, oy = d.ny / 2;
  for (Index ix = 0; ix < d.nx; ix++) {
    for (Index iy = 0; iy < d.ny; iy++) {
      for (Index c = 0; c < d.channels; c++) {
        out[((ix + ox) * py + iy + oy) * d.channels + c] = image[(ix * d.ny + iy) * d.channels + c];
      }
    }
  }
  return out;
}

auto crop_center(CxArray const &padded) -> CxArray
{
  auto const d = image_dims(padded);
  if (d.nx % 2 || d.ny % 2) { throw DataError("crop_center needs even padded sizes, got " + shape_string(padded.shape())); }
  Index const nx = d.nx / 2, ny = d.ny / 2;
  Index const ox = nx / 2, oy = ny / 2;
  CxArray out(image_shape(nx, ny, d.channels, padded.rank() == 3));
  for (Index ix = 0; ix < nx; ix++) {
    for (Index iy = 0; iy < ny; iy++) {
      for (Index c = 0; c < d.channels; c++) {
        out[(ix * ny + iy) * d.channels + c] = padded[((ix + ox) * d.ny + iy + oy) * d.channels + c];
      }
    }
  }
  return out;
}

namespace {

// PSF on the 2x grid (centred positions) -> Toeplitz diagonals.
auto psf_to_diagonals(CxArray psf, Index nx, Index ny) -> CxArray
{
  Index const px = 2 * nx, py = 2 * ny;
  Index const P = psf.rank() == 3 ? psf.dim(2) : 1;
  CxArray q({px, py, P});
  for (Index ix = 0; ix < px; ix++) {
    for (Index iy = 0; iy < py; iy++) {
      if (ix == 0 || iy == 0) { continue; } // Nyquist displacement, never reached
      Index const sx = wrap(ix - nx, px);
      Index const sy = wrap(iy - ny, py);
      for (Index p = 0; p < P; p++) {
        q[(sx * py + sy) * P + p] = psf[(ix * py + iy) * P + p];
      }
    }
  }
  fft::forward(q.data(), px, py, P);
  return q;
}

auto weight_block(CxArray const &weights, Index M) -> void
{
  if (weights.rank() != 2 || weights.dim(0) != M) {
    throw DataError("psf weights must be [M, P] matching the coordinates, got " + shape_string(weights.shape()));
  }
}

} // namespace

auto psf_diagonals(std::span<KPoint const> coords, CxArray const &weights, Index nx, Index ny) -> CxArray
{
  if (nx % 2 || ny % 2) { throw DataError("psf_diagonal needs even image sizes"); }
  weight_block(weights, static_cast<Index>(coords.size()));
  return psf_to_diagonals(ndft_adjoint(weights, coords, 2 * nx, 2 * ny), nx, ny);
}

auto psf_diagonals_gridded(std::span<KPoint const> coords, CxArray const &weights, Index nx, Index ny,
                           GriddingOptions opts) -> CxArray
{
  if (nx % 2 || ny % 2) { throw DataError("psf_diagonal needs even image sizes"); }
  weight_block(weights, static_cast<Index>(coords.size()));
  auto plan = std::make_shared<GriddingPlan const>(2 * nx, 2 * ny, opts);
  return psf_to_diagonals(Nufft(plan, coords).adjoint(weights), nx, ny);
}

namespace {
auto single(std::span<Cx const> weights) -> CxArray
{
  CxArray w({static_cast<Index>(weights.size()), 1});
  std::copy(weights.begin(), weights.end(), w.data());
  return w;
}
} // namespace

auto psf_diagonal(std::span<KPoint const> coords, std::span<Cx const> weights, Index nx, Index ny)
  -> ToeplitzDiagonal
{
  auto q = psf_diagonals(coords, single(weights), nx, ny);
  return {std::move(q).reshaped({2 * nx, 2 * ny}), nx, ny};
}

auto psf_diagonal_gridded(std::span<KPoint const> coords, std::span<Cx const> weights, Index nx, Index ny,
                          GriddingOptions opts) -> ToeplitzDiagonal
{
  auto q = psf_diagonals_gridded(coords, single(weights), nx, ny, opts);
  return {std::move(q).reshaped({2 * nx, 2 * ny}), nx, ny};
}

auto toeplitz_apply(CxArray const &x, ToeplitzDiagonal const &q) -> CxArray
{
  auto const d = image_dims(x);
  if (d.nx != q.nx || d.ny != q.ny) {
    throw DataError("toeplitz_apply: image " + shape_string(x.shape()) + " does not match diagonal");
  }
  Index const px = 2 * d.nx, py = 2 * d.ny;
  auto padded = zero_pad_embed(x);
  fft::forward(padded.data(), px, py, d.channels);
  for (Index n = 0; n < px * py; n++) {
    for (Index c = 0; c < d.channels; c++) {
      padded[n * d.channels + c] *= q.q[n];
    }
  }
  fft::inverse(padded.data(), px, py, d.channels);
  double const scale = 1.0 / static_cast<double>(px * py);
  for (auto &v : padded.span()) {
    v *= scale;
  }
  return crop_center(padded);
}

} // namespace ncsub
