#include "ncsub/phantom.hpp"
#include "ncsub/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace ncsub {

auto default_tissues() -> std::vector<Tissue>
{
  return {
    {{0.0, 0.0, 0.42, 0.36, 0.0}, 0.8, 1.2, false},     // body
    {{-0.1, 0.04, 0.13, 0.11, 0.3}, 1.0, 1.6, true},    // blood pool
    {{0.13, -0.08, 0.09, 0.07, -0.4}, 0.7, 0.9, true},  // muscle
    {{0.0, -0.26, 0.22, 0.05, 0.0}, 0.9, 0.3, false},   // fat band
  };
}

void PhantomConfig::validate() const
{
  if (nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0) { throw UsageError("phantom size must be even and >= 2"); }
  if (frames < 1) { throw UsageError("phantom needs at least one frame"); }
  if (tissues.empty()) { throw DataError("phantom has no tissues"); }
  for (auto const &t : tissues) {
    if (!(t.t1 > 0.0)) { throw DataError("tissue T1 must be positive"); }
    if (!(t.shape.a > 0.0) || !(t.shape.b > 0.0)) { throw DataError("degenerate ellipse (non-positive semi-axis)"); }
  }
  if (!(tr > 0.0)) { throw UsageError("tr must be positive"); }
  if (!(motion_period > 0.0)) { throw UsageError("motion period must be positive"); }
  if (!(energy > 0.0 && energy <= 1.0)) { throw UsageError("energy fraction must lie in (0, 1]"); }
  if (max_rank < 0) { throw UsageError("max_rank must be >= 0"); }
}

namespace {

// Soft inside-indicator of an ellipse at pixel (ix, iy).
auto ellipse_mask(Ellipse const &e, double dx, double dy, Index ix, Index iy, Index nx, Index ny, double width)
  -> double
{
  double const px = static_cast<double>(ix - nx / 2) / static_cast<double>(nx) - (e.cx + dx);
  double const py = static_cast<double>(iy - ny / 2) / static_cast<double>(ny) - (e.cy + dy);
  double const c = std::cos(e.angle), s = std::sin(e.angle);
  double const u = (c * px + s * py) / e.a;
  double const v = (-s * px + c * py) / e.b;
  double const rho = std::sqrt(u * u + v * v);
  // Signed distance to the boundary in pixels, approximately.
  double const d = (rho - 1.0) * std::min(e.a, e.b) * static_cast<double>(std::max(nx, ny));
  if (width <= 0.0) { return d <= 0.0 ? 1.0 : 0.0; }
  return 0.5 * (1.0 - std::tanh(d / width));
}

} // namespace

auto factorize_frames(CxArray const &x, double energy, Index max_rank) -> Phantom
{
  if (x.rank() != 3) { throw DataError("frames must be [nx, ny, T]"); }
  Index const nx = x.dim(0), ny = x.dim(1), T = x.dim(2), P = nx * ny;
  using RowMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMat const> X(x.data(), P, T);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(X, Eigen::ComputeThinV);
  auto const &s = svd.singularValues();
  double total = 0.0;
  for (Index i = 0; i < s.size(); i++) {
    total += s[i] * s[i];
  }
  if (!(total > 0.0)) { throw DataError("phantom frames are identically zero"); }
  Index L = 0;
  double kept = 0.0;
  while (L < s.size() && kept < energy * total) {
    kept += s[L] * s[L];
    L++;
  }
  if (max_rank > 0) { L = std::min(L, max_rank); }
  L = std::max<Index>(L, 1);

  Eigen::MatrixXcd const &V = svd.matrixV();
  CxArray phi({L, T});
  for (Index l = 0; l < L; l++) {
    // Rotate each row so its largest-magnitude entry is real and positive.
    Index imax = 0;
    for (Index t = 1; t < T; t++) {
      if (std::abs(V(t, l)) > std::abs(V(imax, l))) { imax = t; }
    }
    Cx const rot = std::abs(V(imax, l)) > 0.0 ? V(imax, l) / std::abs(V(imax, l)) : Cx{1.0};
    for (Index t = 0; t < T; t++) {
      phi(l, t) = std::conj(V(t, l) / rot);
    }
  }
  SpatialFactor u{CxArray({nx, ny, L})};
  for (Index p = 0; p < P; p++) {
    for (Index l = 0; l < L; l++) {
      Cx acc{};
      for (Index t = 0; t < T; t++) {
        acc += x[p * T + t] * std::conj(phi(l, t));
      }
      u.u[p * L + l] = acc;
    }
  }
  return {x, std::move(u), TemporalBasis(std::move(phi)), std::vector<double>(s.data(), s.data() + s.size())};
}

auto make_phantom(PhantomConfig const &cfg) -> Phantom
{
  cfg.validate();
  auto tissues = cfg.tissues;
  if (cfg.seed != 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (auto &t : tissues) {
      t.t1 *= 1.0 + 0.05 * jitter(rng);
      t.shape.cx += 0.01 * jitter(rng);
      t.shape.cy += 0.01 * jitter(rng);
    }
  }
  Index const nx = cfg.nx, ny = cfg.ny, T = cfg.frames;
  CxArray x({nx, ny, T});
  for (Index t = 0; t < T; t++) {
    double const tau = static_cast<double>(t) * cfg.tr;
    double const shift = cfg.motion_amplitude * std::sin(2.0 * kPi * static_cast<double>(t) / cfg.motion_period);
    for (auto const &tissue : tissues) {
      double const dx = tissue.moves ? shift * tissue.shape.a : 0.0;
      double const signal = tissue.pd * ir_signal(tissue.t1, tau);
      for (Index ix = 0; ix < nx; ix++) {
        for (Index iy = 0; iy < ny; iy++) {
          double const m = ellipse_mask(tissue.shape, dx, 0.0, ix, iy, nx, ny, cfg.edge_width);
          Cx &v = x(ix, iy, t);
          v = v * (1.0 - m) + m * signal;
        }
      }
    }
  }
  return factorize_frames(x, cfg.energy, cfg.max_rank);
}

auto make_coil_maps(Index n_coils, Index nx, Index ny) -> CoilSensitivities
{
  if (n_coils < 1) { throw UsageError("need at least one coil"); }
  if (nx < 1 || ny < 1) { throw UsageError("coil map size must be positive"); }
  CxArray maps({n_coils, nx, ny});
  double const width = 0.4;
  for (Index c = 0; c < n_coils; c++) {
    double const theta = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(n_coils);
    double const ccx = 0.5 * std::cos(theta), ccy = 0.5 * std::sin(theta);
    for (Index ix = 0; ix < nx; ix++) {
      double const px = static_cast<double>(ix - nx / 2) / static_cast<double>(nx);
      for (Index iy = 0; iy < ny; iy++) {
        double const py = static_cast<double>(iy - ny / 2) / static_cast<double>(ny);
        double const r2 = (px - ccx) * (px - ccx) + (py - ccy) * (py - ccy);
        double const mag = std::exp(-r2 / (2.0 * width * width));
        // Half a cycle of phase across the field, along the lobe direction.
        double const ph = kPi * (std::cos(theta) * px + std::sin(theta) * py) + theta;
        maps(c, ix, iy) = std::polar(mag, ph);
      }
    }
  }
  return normalize_coil_maps(std::move(maps));
}

auto simulate_acquisition(CxArray const &x, CoilSensitivities const &maps, Trajectory const &traj,
                          SamplingSchedule const &schedule, double noise_sigma, std::uint64_t seed, bool exact)
  -> KTData
{
  if (x.rank() != 3 || x.dim(0) != maps.nx() || x.dim(1) != maps.ny()) {
    throw DataError("frames " + shape_string(x.shape()) + " do not match coil maps " +
                    shape_string(maps.maps.shape()));
  }
  if (schedule.n_readouts() != traj.n_readouts()) { throw DataError("schedule and trajectory readout counts differ"); }
  if (schedule.frames != x.dim(2)) {
    throw DataError("schedule spans " + std::to_string(schedule.frames) + " frames, phantom has " +
                    std::to_string(x.dim(2)));
  }
  if (!(noise_sigma >= 0.0)) { throw UsageError("noise sigma must be >= 0"); }
  Index const nx = x.dim(0), ny = x.dim(1), T = x.dim(2), C = maps.n_coils();
  Index const R = traj.n_readouts(), S = traj.n_samples();

  std::vector<std::vector<Index>> by_frame(static_cast<std::size_t>(T));
  for (Index m = 0; m < R; m++) {
    by_frame[schedule[m]].push_back(m);
  }
  std::shared_ptr<GriddingPlan const> plan;
  if (!exact) { plan = std::make_shared<GriddingPlan const>(nx, ny, GriddingOptions{}); }

  KTData out{CxArray({C, R, S})};
  for (Index t = 0; t < T; t++) {
    auto const &ms = by_frame[t];
    if (ms.empty()) { continue; }
    std::vector<KPoint> coords;
    coords.reserve(ms.size() * static_cast<std::size_t>(S));
    for (auto m : ms) {
      auto const ro = traj.readout(m);
      coords.insert(coords.end(), ro.begin(), ro.end());
    }
    // Coil images as channels: [nx][ny][C].
    CxArray img({nx, ny, C});
    for (Index c = 0; c < C; c++) {
      for (Index ix = 0; ix < nx; ix++) {
        for (Index iy = 0; iy < ny; iy++) {
          img(ix, iy, c) = maps.maps(c, ix, iy) * x(ix, iy, t);
        }
      }
    }
    auto const k = exact ? ndft_forward(img, coords) : Nufft(plan, coords).forward(img);
    for (std::size_t i = 0; i < ms.size(); i++) {
      for (Index s = 0; s < S; s++) {
        for (Index c = 0; c < C; c++) {
          out.b(c, ms[i], s) = k[(static_cast<Index>(i) * S + s) * C + c];
        }
      }
    }
  }

  if (noise_sigma > 0.0) {
    double const rms = la::norm(out.b) / std::sqrt(static_cast<double>(out.b.size()));
    double const sd = noise_sigma * rms / std::sqrt(2.0);
    for (Index m = 0; m < R; m++) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(static_cast<std::uint64_t>(m) >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> n(0.0, sd);
      for (Index c = 0; c < C; c++) {
        for (Index s = 0; s < S; s++) {
          double const re = n(rng);
          double const im = n(rng);
          out.b(c, m, s) += Cx{re, im};
        }
      }
    }
  }
  return out;
}

auto synthesize_frames(SpatialFactor const &u, TemporalBasis const &phi) -> CxArray
{
  if (u.u.rank() != 3 || u.rank() != phi.rank()) {
    throw DataError("spatial factor " + shape_string(u.u.shape()) + " does not match basis rank " +
                    std::to_string(phi.rank()));
  }
  Index const P = u.nx() * u.ny(), L = u.rank(), T = phi.frames();
  CxArray x({u.nx(), u.ny(), T});
  for (Index p = 0; p < P; p++) {
    for (Index t = 0; t < T; t++) {
      Cx acc{};
      for (Index l = 0; l < L; l++) {
        acc += u.u[p * L + l] * phi(l, t);
      }
      x[p * T + t] = acc;
    }
  }
  return x;
}

auto noisy_prior(SpatialFactor const &u_true, double snr, std::uint64_t seed) -> SpatialFactor
{
  if (!(snr > 0.0)) { throw UsageError("prior SNR must be positive"); }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  CxArray noise(u_true.u.shape());
  for (auto &v : noise.span()) {
    double const re = n(rng);
    double const im = n(rng);
    v = {re, im};
  }
  double const nn = la::norm(noise);
  auto out = u_true;
  if (nn > 0.0) { la::axpy(la::norm(u_true.u) / (snr * nn), noise, out.u); }
  return out;
}

auto smooth_prior(SpatialFactor const &u, double sigma) -> SpatialFactor
{
  if (!(sigma >= 0.0)) { throw UsageError("smoothing sigma must be >= 0"); }
  if (sigma == 0.0) { return u; }
  Index const nx = u.nx(), ny = u.ny(), L = u.rank();
  Index const r = static_cast<Index>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double ksum = 0.0;
  for (Index i = -r; i <= r; i++) {
    k[i + r] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    ksum += k[i + r];
  }
  for (auto &v : k) {
    v /= ksum;
  }
  auto clampi = [](Index i, Index n) { return std::clamp<Index>(i, 0, n - 1); };
  CxArray tmp(u.u.shape());
  for (Index ix = 0; ix < nx; ix++) {
    for (Index iy = 0; iy < ny; iy++) {
      for (Index l = 0; l < L; l++) {
        Cx acc{};
        for (Index d = -r; d <= r; d++) {
          acc += k[d + r] * u.u(clampi(ix + d, nx), iy, l);
        }
        tmp(ix, iy, l) = acc;
      }
    }
  }
  SpatialFactor out{CxArray(u.u.shape())};
  for (Index ix = 0; ix < nx; ix++) {
    for (Index iy = 0; iy < ny; iy++) {
      for (Index l = 0; l < L; l++) {
        Cx acc{};
        for (Index d = -r; d <= r; d++) {
          acc += k[d + r] * tmp(ix, clampi(iy + d, ny), l);
        }
        out.u(ix, iy, l) = acc;
      }
    }
  }
  return out;
}

auto simulate(SimConfig cfg) -> Simulation
{
  auto traj = golden_angle_spokes(cfg.spokes, cfg.samples);
  auto schedule = linear_schedule(cfg.spokes, cfg.readouts_per_frame);
  cfg.phantom.frames = schedule.frames;
  auto ph = make_phantom(cfg.phantom);
  auto maps = make_coil_maps(cfg.coils, cfg.phantom.nx, cfg.phantom.ny);
  auto b = simulate_acquisition(ph.x, maps, traj, schedule, cfg.noise_sigma, cfg.seed, cfg.exact);
  return {std::move(ph), std::move(maps), std::move(traj), std::move(schedule), std::move(b)};
}

} // namespace ncsub
