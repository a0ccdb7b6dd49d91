#include "ncsub/solvers.hpp"
#include "ncsub/fft.hpp"
#include "ncsub/linalg.hpp"

#include <cmath>
#include <random>

namespace ncsub {

void DCConfig::validate() const
{
  if (!std::isfinite(alpha) || !std::isfinite(lambda)) { throw UsageError("alpha and lambda must be finite"); }
  if (alpha < 0.0) { throw UsageError("alpha must be >= 0"); }
  if (lambda < 0.0) { throw UsageError("lambda must be >= 0"); }
  if (cg_iters < 0) { throw UsageError("cg_iters must be >= 0"); }
}

auto default_ramp_epsilon(Index nx, Index ny) -> double { return 0.5 / static_cast<double>(std::max(nx, ny)); }

auto build_ramp_preconditioner(Index nx, Index ny, double epsilon) -> Preconditioner
{
  if (!(epsilon > 0.0)) { throw UsageError("ramp epsilon must be > 0"); }
  if (nx < 1 || ny < 1) { throw UsageError("preconditioner size must be positive"); }
  Preconditioner p{RealArray({nx, ny})};
  for (Index ix = 0; ix < nx; ix++) {
    double const kx = static_cast<double>(ix - nx / 2) / static_cast<double>(nx);
    for (Index iy = 0; iy < ny; iy++) {
      double const ky = static_cast<double>(iy - ny / 2) / static_cast<double>(ny);
      p.ramp(ix, iy) = std::max(std::hypot(kx, ky), epsilon);
    }
  }
  return p;
}

auto build_ramp_preconditioner(Index nx, Index ny) -> Preconditioner
{
  return build_ramp_preconditioner(nx, ny, default_ramp_epsilon(nx, ny));
}

void apply_preconditioner(Preconditioner const &p, CxArray &y)
{
  Index const nx = p.ramp.dim(0), ny = p.ramp.dim(1);
  if (y.rank() < 3 || y.dim(y.rank() - 3) != nx || y.dim(y.rank() - 2) != ny) {
    throw DataError("preconditioner " + shape_string(p.ramp.shape()) + " does not match " + shape_string(y.shape()));
  }
  Index const L = y.dim(y.rank() - 1);
  Index const block = nx * ny * L;
  Index const blocks = y.size() / block;
  double const inv = 1.0 / static_cast<double>(nx * ny);
  for (Index b = 0; b < blocks; b++) {
    Cx *d = y.data() + b * block;
    fft::forward(d, nx, ny, L);
    // Unshifted bin i holds centred frequency index (i + n/2) mod n.
    for (Index ix = 0; ix < nx; ix++) {
      Index const cx = (ix + nx / 2) % nx;
      for (Index iy = 0; iy < ny; iy++) {
        double const r = p.ramp(cx, (iy + ny / 2) % ny) * inv;
        for (Index l = 0; l < L; l++) {
          d[(ix * ny + iy) * L + l] *= r;
        }
      }
    }
    fft::inverse(d, nx, ny, L);
  }
}

auto zero_filled_init(Encoding const &E, KTData const &b, DensityWeights const &d) -> SpatialFactor
{
  return E.weighted_adjoint(b, d);
}

auto gd_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> SpatialFactor
{
  cfg.validate();
  auto out = u_cnn;
  if (cfg.alpha == 0.0) { return out; }
  auto const n = E.normal(u_cnn, cfg.normal_path);
  auto const a = E.adjoint(b);
  for (Index i = 0; i < out.u.size(); i++) {
    out.u[i] -= cfg.alpha * (n.u[i] - a.u[i]);
  }
  return out;
}

auto pgd_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg,
            Preconditioner const &p) -> SpatialFactor
{
  cfg.validate();
  auto out = u_cnn;
  if (cfg.alpha == 0.0) { return out; }
  auto g = E.coil_normal(apply_S(u_cnn, E.maps()), cfg.normal_path);
  auto const a = E.coil_adjoint(b);
  la::axpy(-1.0, a, g);
  apply_preconditioner(p, g);
  auto const step = combine_S(g, E.maps());
  la::axpy(-cfg.alpha, step.u, out.u);
  return out;
}

auto ds_dc_coils(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> CxArray
{
  cfg.validate();
  if (!(cfg.lambda > 0.0)) { throw UsageError("ds_dc requires lambda > 0"); }
  auto const &field = E.field();
  auto r = E.coil_adjoint(b);
  la::axpy(cfg.lambda, apply_S(u_cnn, E.maps()), r);
  Index const C = E.maps().n_coils(), P = E.nx() * E.ny() * E.rank();
  CxArray y(r.shape());
  for (Index c = 0; c < C; c++) {
    CxArray rc({E.nx(), E.ny(), E.rank()});
    std::copy(r.data() + c * P, r.data() + (c + 1) * P, rc.data());
    auto const yc = field_inverse_apply(field, cfg.lambda, rc);
    std::copy(yc.data(), yc.data() + P, y.data() + c * P);
  }
  return y;
}

auto ds_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> SpatialFactor
{
  return combine_S(ds_dc_coils(E, u_cnn, b, cfg), E.maps());
}

auto conjugate_gradient(std::function<CxArray(CxArray const &)> const &normal, double shift, CxArray const &rhs,
                        CxArray x, Index iters) -> CxArray
{
  if (iters == 0) { return x; }
  auto apply = [&](CxArray const &v) {
    auto out = normal(v);
    la::axpy(shift, v, out);
    return out;
  };
  auto r = rhs;
  la::axpy(-1.0, apply(x), r);
  auto p = r;
  double rr = la::norm2(r);
  for (Index k = 0; k < iters; k++) {
    if (rr == 0.0) { break; }
    auto const ap = apply(p);
    double const pap = la::dot(p, ap).real();
    if (!(pap > 0.0)) { throw NumericalError("conjugate gradient met a non-positive curvature"); }
    double const a = rr / pap;
    la::axpy(a, p, x);
    la::axpy(-a, ap, r);
    double const rr_next = la::norm2(r);
    double const beta = rr_next / rr;
    rr = rr_next;
    for (Index i = 0; i < p.size(); i++) {
      p[i] = r[i] + beta * p[i];
    }
  }
  return x;
}

auto cg_dc(Encoding const &E, SpatialFactor const &u_cnn, KTData const &b, DCConfig const &cfg) -> SpatialFactor
{
  cfg.validate();
  if (!(cfg.lambda > 0.0)) { throw UsageError("cg_dc requires lambda > 0"); }
  if (cfg.cg_iters == 0) { return u_cnn; }
  auto rhs = E.adjoint(b).u;
  la::axpy(cfg.lambda, u_cnn.u, rhs);
  auto const normal = [&](CxArray const &v) { return E.normal(SpatialFactor{v}, cfg.normal_path).u; };
  return {conjugate_gradient(normal, cfg.lambda, rhs, u_cnn.u, cfg.cg_iters)};
}

auto residual_norm(Encoding const &E, SpatialFactor const &u, KTData const &b) -> double
{
  return la::dist(E.forward(u).b, b.b);
}

auto dc_objective(Encoding const &E, SpatialFactor const &u, KTData const &b, SpatialFactor const &u_cnn,
                  double lambda) -> double
{
  double const r = residual_norm(E, u, b);
  double const d = la::dist(u.u, u_cnn.u);
  return r * r + lambda * d * d;
}

auto coil_dc_objective(Encoding const &E, CxArray const &y, KTData const &b, SpatialFactor const &u_cnn,
                       double lambda) -> double
{
  double const r = la::dist(E.coil_forward(y).b, b.b);
  double const d = la::dist(y, apply_S(u_cnn, E.maps()));
  return r * r + lambda * d * d;
}

auto estimate_normal_norm(Encoding const &E, NormalPath path, Index iters) -> double
{
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  SpatialFactor v{CxArray({E.nx(), E.ny(), E.rank()})};
  for (auto &x : v.u.span()) {
    x = {dist(rng), dist(rng)};
  }
  la::scale(1.0 / la::norm(v.u), v.u);
  double est = 0.0;
  for (Index k = 0; k < iters; k++) {
    auto w = E.normal(v, path);
    est = la::norm(w.u);
    if (est == 0.0) { return 0.0; }
    la::scale(1.0 / est, w.u);
    v = std::move(w);
  }
  return est;
}

auto alpha_grid(double normal_norm) -> std::vector<double>
{
  if (!(normal_norm > 0.0)) { throw NumericalError("normal operator norm estimate is zero"); }
  std::vector<double> g;
  for (int i = 0; i < 10; i++) {
    g.push_back(0.1 * std::pow(20.0, i / 9.0) / normal_norm);
  }
  return g;
}

auto lambda_grid(double normal_norm) -> std::vector<double>
{
  if (!(normal_norm > 0.0)) { throw NumericalError("normal operator norm estimate is zero"); }
  std::vector<double> g;
  for (int i = 0; i <= 12; i++) {
    g.push_back(std::pow(10.0, -4.0 + 0.5 * i) * normal_norm);
  }
  return g;
}

auto tune(std::vector<double> const &grid, std::function<double(double)> const &loss) -> double
{
  if (grid.empty()) { throw UsageError("empty tuning grid"); }
  double best = grid.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (auto v : grid) {
    double l;
    try {
      l = loss(v);
    } catch (NumericalError const &) {
      continue;
    }
    if (l < best_loss) {
      best_loss = l;
      best = v;
    }
  }
  return best;
}

namespace {

void check_haar(CxArray const &u)
{
  if (u.rank() != 3 || u.dim(0) % 2 != 0 || u.dim(1) % 2 != 0) {
    throw DataError("Haar transform needs [nx, ny, L] with even nx, ny; got " + shape_string(u.shape()));
  }
}

} // namespace

auto haar_forward(CxArray const &u) -> CxArray
{
  check_haar(u);
  Index const nx = u.dim(0), ny = u.dim(1), L = u.dim(2), hx = nx / 2, hy = ny / 2;
  CxArray w(u.shape());
  for (Index i = 0; i < hx; i++) {
    for (Index j = 0; j < hy; j++) {
      for (Index l = 0; l < L; l++) {
        Cx const a = u(2 * i, 2 * j, l), b = u(2 * i, 2 * j + 1, l);
        Cx const c = u(2 * i + 1, 2 * j, l), d = u(2 * i + 1, 2 * j + 1, l);
        w(i, j, l) = 0.5 * (a + b + c + d);
        w(i, j + hy, l) = 0.5 * (a - b + c - d);
        w(i + hx, j, l) = 0.5 * (a + b - c - d);
        w(i + hx, j + hy, l) = 0.5 * (a - b - c + d);
      }
    }
  }
  return w;
}

auto haar_inverse(CxArray const &w) -> CxArray
{
  check_haar(w);
  Index const nx = w.dim(0), ny = w.dim(1), L = w.dim(2), hx = nx / 2, hy = ny / 2;
  CxArray u(w.shape());
  for (Index i = 0; i < hx; i++) {
    for (Index j = 0; j < hy; j++) {
      for (Index l = 0; l < L; l++) {
        Cx const s = w(i, j, l), h1 = w(i, j + hy, l), h2 = w(i + hx, j, l), h3 = w(i + hx, j + hy, l);
        u(2 * i, 2 * j, l) = 0.5 * (s + h1 + h2 + h3);
        u(2 * i, 2 * j + 1, l) = 0.5 * (s - h1 + h2 - h3);
        u(2 * i + 1, 2 * j, l) = 0.5 * (s + h1 - h2 - h3);
        u(2 * i + 1, 2 * j + 1, l) = 0.5 * (s - h1 - h2 + h3);
      }
    }
  }
  return u;
}

auto soft_threshold(double x, double tau) -> double
{
  double const m = std::abs(x) - tau;
  return m > 0.0 ? std::copysign(m, x) : 0.0;
}

auto soft_threshold(Cx z, double tau) -> Cx
{
  double const m = std::abs(z);
  return m > tau ? z * ((m - tau) / m) : Cx{};
}

auto admm_objective(Encoding const &E, SpatialFactor const &u, KTData const &b, double lambda_w) -> double
{
  double const r = residual_norm(E, u, b);
  double l1 = 0.0;
  for (auto const &v : haar_forward(u.u).span()) {
    l1 += std::abs(v);
  }
  return 0.5 * r * r + lambda_w * l1;
}

auto admm_wavelet_recon(Encoding const &E, KTData const &b, SpatialFactor const &u0, AdmmConfig const &cfg)
  -> SpatialFactor
{
  if (!(cfg.rho > 0.0)) { throw UsageError("ADMM rho must be > 0"); }
  if (!(cfg.lambda_w >= 0.0)) { throw UsageError("ADMM lambda_w must be >= 0"); }
  if (cfg.n_iters < 0 || cfg.inner_iters < 0) { throw UsageError("ADMM iteration counts must be >= 0"); }
  auto const ahb = E.adjoint(b).u;
  auto const normal = [&](CxArray const &v) { return E.normal(SpatialFactor{v}, cfg.normal_path).u; };
  auto u = u0.u;
  auto v = haar_forward(u);
  CxArray dual(v.shape());
  double const tau = cfg.lambda_w / cfg.rho;
  for (Index k = 0; k < cfg.n_iters; k++) {
    auto target = v;
    la::axpy(-1.0, dual, target);
    auto rhs = haar_inverse(target);
    la::scale(cfg.rho, rhs);
    la::axpy(1.0, ahb, rhs);
    u = conjugate_gradient(normal, cfg.rho, rhs, std::move(u), cfg.inner_iters);
    auto const wu = haar_forward(u);
    for (Index i = 0; i < v.size(); i++) {
      v[i] = soft_threshold(wu[i] + dual[i], tau);
      dual[i] += wu[i] - v[i];
    }
  }
  return {std::move(u)};
}

} // namespace ncsub
