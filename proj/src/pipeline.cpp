#include "ncsub/pipeline.hpp"
#include "ncsub/linalg.hpp"
#include "ncsub/memtrack.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace ncsub {

auto to_string(Method m) -> char const *
{
  switch (m) {
  case Method::ZeroFilled: return "zf";
  case Method::Prior: return "prior";
  case Method::GD: return "gd";
  case Method::PGD: return "pgd";
  case Method::DS: return "ds";
  case Method::CG: return "cg";
  case Method::ADMM: return "admm";
  }
  return "?";
}

auto parse_method(std::string const &s) -> Method
{
  for (auto m : {Method::ZeroFilled, Method::Prior, Method::GD, Method::PGD, Method::DS, Method::CG, Method::ADMM}) {
    if (s == to_string(m)) { return m; }
  }
  throw UsageError("unknown method '" + s + "' (expected zf|prior|gd|pgd|ds|cg|admm)");
}

auto parse_prior(std::string const &s) -> PriorKind
{
  if (s == "noisy") { return PriorKind::Noisy; }
  if (s == "copy-init") { return PriorKind::CopyInit; }
  if (s == "smooth-init") { return PriorKind::SmoothInit; }
  throw UsageError("unknown prior '" + s + "' (expected noisy|copy-init|smooth-init)");
}

void prepare_encoding(Encoding &E, Method m, NormalPath path, FieldOptions const &field)
{
  bool const iterative = m == Method::GD || m == Method::PGD || m == Method::CG || m == Method::ADMM;
  if (iterative && path == NormalPath::SpokeKernel && !E.has_spoke_kernels()) { E.prepare_spoke_kernels(); }
  if ((m == Method::DS || (iterative && path == NormalPath::Toeplitz)) && !E.has_toeplitz()) {
    E.prepare_toeplitz(field);
  }
}

auto reconstruct(Method m, Encoding const &E, KTData const &b, SpatialFactor const &u_cnn, DensityWeights const &d,
                 ReconParams const &p, Preconditioner const &precond) -> SpatialFactor
{
  switch (m) {
  case Method::ZeroFilled: return zero_filled_init(E, b, d);
  case Method::Prior: return u_cnn;
  case Method::GD: return gd_dc(E, u_cnn, b, p.dc);
  case Method::PGD: return pgd_dc(E, u_cnn, b, p.dc, precond);
  case Method::DS: return ds_dc(E, u_cnn, b, p.dc);
  case Method::CG: return cg_dc(E, u_cnn, b, p.dc);
  case Method::ADMM: {
    AdmmConfig a;
    a.lambda_w = p.admm_lambda;
    a.rho = p.admm_rho > 0.0 ? p.admm_rho : estimate_normal_norm(E, p.dc.normal_path);
    a.n_iters = p.admm_iters;
    a.inner_iters = p.admm_inner;
    a.normal_path = p.dc.normal_path;
    return admm_wavelet_recon(E, b, u_cnn, a);
  }
  }
  throw UsageError("unknown method");
}

namespace {

auto trim(std::string s) -> std::string
{
  auto const b = s.find_first_not_of(" \t\r");
  auto const e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

auto split(std::string const &s, char sep) -> std::vector<std::string>
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

template <typename T>
auto parse_number(std::string const &key, std::string const &v) -> T
{
  std::istringstream is(v);
  T x{};
  is >> x;
  if (!is || !is.eof()) { throw UsageError("suite: bad value for " + key + ": '" + v + "'"); }
  return x;
}

} // namespace

auto parse_suite(std::string const &text) -> Suite
{
  Suite s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (auto h = line.find('#'); h != std::string::npos) { line.resize(h); }
    line = trim(line);
    if (line.empty()) { continue; }
    auto const eq = line.find('=');
    if (eq == std::string::npos) { throw UsageError(fmt::format("suite line {}: expected key=value", lineno)); }
    auto const key = trim(line.substr(0, eq));
    auto const val = trim(line.substr(eq + 1));
    if (key == "nx") {
      s.nx = parse_number<Index>(key, val);
    } else if (key == "ny") {
      s.ny = parse_number<Index>(key, val);
    } else if (key == "coils") {
      s.coils = parse_number<Index>(key, val);
    } else if (key == "spokes") {
      s.spokes = parse_number<Index>(key, val);
    } else if (key == "samples") {
      s.samples = parse_number<Index>(key, val);
    } else if (key == "readouts_per_frame") {
      s.readouts_per_frame = parse_number<Index>(key, val);
    } else if (key == "l_dim") {
      s.l_dim = parse_number<Index>(key, val);
    } else if (key == "motion") {
      s.motion = parse_number<double>(key, val);
    } else if (key == "noise_sigma") {
      s.noise_sigma = parse_number<double>(key, val);
    } else if (key == "prior") {
      s.prior = parse_prior(val);
    } else if (key == "prior_snr") {
      s.prior_snr = parse_number<double>(key, val);
    } else if (key == "smooth_sigma") {
      s.smooth_sigma = parse_number<double>(key, val);
    } else if (key == "methods") {
      s.methods.clear();
      for (auto const &m : split(val, ',')) {
        s.methods.push_back(parse_method(m));
      }
    } else if (key == "seeds") {
      s.seeds.clear();
      for (auto const &v : split(val, ',')) {
        s.seeds.push_back(parse_number<std::uint64_t>(key, v));
      }
    } else if (key == "validation_seed") {
      s.validation_seed = parse_number<std::uint64_t>(key, val);
    } else if (key == "normal_path") {
      s.normal_path = parse_normal_path(val);
    } else if (key == "exact_ndft") {
      s.exact_ndft = parse_number<int>(key, val) != 0;
    } else if (key == "cg_iters") {
      s.cg_iters = parse_number<Index>(key, val);
    } else if (key == "frames") {
      s.frames.clear();
      for (auto const &v : split(val, ',')) {
        s.frames.push_back(parse_number<Index>(key, v));
      }
    } else if (key == "timing_reps") {
      s.timing_reps = parse_number<Index>(key, val);
    } else if (key == "error_maps") {
      s.error_maps = parse_number<int>(key, val) != 0;
    } else {
      throw UsageError(fmt::format("suite line {}: unknown key '{}'", lineno, key));
    }
  }
  if (s.methods.empty()) { throw UsageError("suite lists no methods"); }
  if (s.seeds.empty()) { throw UsageError("suite lists no seeds"); }
  if (s.timing_reps < 1) { throw UsageError("timing_reps must be >= 1"); }
  return s;
}

auto read_suite(std::filesystem::path const &path) -> Suite
{
  std::ifstream f(path);
  if (!f) { throw UsageError("cannot read suite file " + path.string()); }
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_suite(ss.str());
}

auto make_case(Suite const &suite, std::uint64_t seed) -> SuiteCase
{
  SimConfig c;
  c.phantom.nx = suite.nx;
  c.phantom.ny = suite.ny;
  c.phantom.max_rank = suite.l_dim;
  c.phantom.motion_amplitude = suite.motion;
  c.phantom.seed = seed;
  c.coils = suite.coils;
  c.spokes = suite.spokes;
  c.samples = suite.samples;
  c.readouts_per_frame = suite.readouts_per_frame;
  c.noise_sigma = suite.noise_sigma;
  c.seed = seed;
  c.exact = true;
  SuiteCase k;
  k.sim = simulate(c);
  k.E = std::make_unique<Encoding>(k.sim.maps, k.sim.traj, k.sim.schedule, k.sim.phantom.phi,
                                   suite.exact_ndft ? FourierMode::Exact : FourierMode::Gridding);
  FieldOptions fo;
  fo.exact = suite.exact_ndft;
  for (auto m : suite.methods) {
    prepare_encoding(*k.E, m, suite.normal_path, fo);
  }
  k.density = frame_quadrature_weights(k.sim.traj, k.sim.schedule);
  k.u0 = zero_filled_init(*k.E, k.sim.b, k.density);
  switch (suite.prior) {
  case PriorKind::Noisy: k.u_cnn = noisy_prior(k.sim.phantom.u_true, suite.prior_snr, seed + 7919); break;
  case PriorKind::CopyInit: k.u_cnn = k.u0; break;
  case PriorKind::SmoothInit: k.u_cnn = smooth_prior(k.u0, suite.smooth_sigma); break;
  }
  k.precond = build_ramp_preconditioner(suite.nx, suite.ny);
  return k;
}

auto tune_suite(Suite const &suite, SuiteCase const &v) -> std::map<Method, ReconParams>
{
  std::map<Method, ReconParams> out;
  auto const &E = *v.E;
  auto const &truth = v.sim.phantom.u_true.u;
  double norm = 0.0;
  auto get_norm = [&] {
    if (norm == 0.0) { norm = estimate_normal_norm(E, suite.normal_path); }
    return norm;
  };
  for (auto m : suite.methods) {
    ReconParams p;
    p.dc.cg_iters = suite.cg_iters;
    p.dc.normal_path = suite.normal_path;
    auto loss_with = [&](auto set) {
      return [&, set](double x) {
        ReconParams q = p;
        set(q, x);
        return nrmse(reconstruct(m, E, v.sim.b, v.u_cnn, v.density, q, v.precond).u, truth);
      };
    };
    switch (m) {
    case Method::GD:
    case Method::PGD: {
      auto set = [](ReconParams &q, double x) { q.dc.alpha = x; };
      p.dc.alpha = tune(alpha_grid(get_norm()), loss_with(set));
      break;
    }
    case Method::DS:
    case Method::CG: {
      auto set = [](ReconParams &q, double x) { q.dc.lambda = x; };
      p.dc.lambda = tune(lambda_grid(get_norm()), loss_with(set));
      break;
    }
    case Method::ADMM: {
      p.admm_rho = get_norm();
      double peak = 0.0;
      for (auto const &c : haar_forward(v.u0.u).span()) {
        peak = std::max(peak, std::abs(c));
      }
      std::vector<double> grid;
      for (double f : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
        grid.push_back(f * peak * p.admm_rho);
      }
      auto set = [](ReconParams &q, double x) { q.admm_lambda = x; };
      p.admm_lambda = tune(grid, loss_with(set));
      break;
    }
    default: break;
    }
    out[m] = p;
  }
  return out;
}

auto run_benchmark(Suite const &suite, std::filesystem::path const &out_dir) -> BenchResult
{
  std::filesystem::create_directories(out_dir);
  BenchResult res;
  {
    auto const validation = make_case(suite, suite.validation_seed);
    res.params = tune_suite(suite, validation);
  }
  for (std::size_t si = 0; si < suite.seeds.size(); si++) {
    auto const seed = suite.seeds[si];
    auto const k = make_case(suite, seed);
    auto const frames_ref = select_frames(k.sim.phantom.x, suite.frames);
    for (auto m : suite.methods) {
      auto const &p = res.params.at(m);
      SpatialFactor u;
      std::vector<double> times;
      std::size_t peak = 0;
      try {
        for (Index r = 0; r < suite.timing_reps; r++) {
          std::optional<memtrack::Recorder> rec;
          if (r == 0) { rec.emplace(); }
          auto const t0 = std::chrono::steady_clock::now();
          u = reconstruct(m, *k.E, k.sim.b, k.u_cnn, k.density, p, k.precond);
          times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
          if (rec) { peak = rec->peak_bytes(); }
          if (times.front() >= 1.0) { break; } // one run suffices for slow stages
        }
      } catch (NumericalError const &e) {
        throw NumericalError(fmt::format("method {} failed: {}", to_string(m), e.what()));
      } catch (UsageError const &e) {
        throw UsageError(fmt::format("method {} failed: {}", to_string(m), e.what()));
      } catch (Error const &e) {
        throw DataError(fmt::format("method {} failed: {}", to_string(m), e.what()));
      }
      std::sort(times.begin(), times.end());
      double const t = times[times.size() / 2];
      auto const sd = std::to_string(seed);
      auto const &truth = k.sim.phantom.u_true.u;
      res.report.rows.push_back({to_string(m), "factor", sd, nrmse(u.u, truth), psnr(u.u, truth),
                                 stack_ssim(u.u, truth), t, peak});
      auto const frames = select_frames(synthesize_frames(u, k.sim.phantom.phi), suite.frames);
      res.report.rows.push_back({to_string(m), "frames", sd, nrmse(frames, frames_ref), psnr(frames, frames_ref),
                                 stack_ssim(frames, frames_ref), t, peak});
      if (suite.error_maps && si == 0) {
        write_error_map_png(out_dir / fmt::format("error_{}.png", to_string(m)), frames, frames_ref);
      }
    }
  }
  res.report.summarize();
  {
    std::ofstream f(out_dir / "metrics.csv");
    f << res.report.csv();
  }
  {
    std::ofstream f(out_dir / "table.txt");
    f << res.report.table();
  }
  {
    std::ofstream f(out_dir / "params.txt");
    for (auto const &[m, p] : res.params) {
      f << fmt::format("{}: alpha={:.6g} lambda={:.6g} cg_iters={} admm_lambda={:.6g} admm_rho={:.6g}\n",
                       to_string(m), p.dc.alpha, p.dc.lambda, p.dc.cg_iters, p.admm_lambda, p.admm_rho);
    }
  }
  return res;
}

} // namespace ncsub
