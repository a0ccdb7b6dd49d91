#include "cli.hpp"

#include "ncsub/metrics.hpp"
#include "ncsub/pipeline.hpp"
#include "ncsub/tensor_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include <cmath>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace ncsub::cli {

namespace {

struct Options
{
  std::string out = ".";
  std::string in;
  Index nx = 32;
  Index ny = 32;
  Index frames = 24;
  Index l_dim = 4;
  Index coils = 4;
  Index spokes = 96;
  Index samples = 0;
  Index rpf = 4;
  double noise_sigma = 0.02;
  std::uint64_t seed = 1;
  double motion = 0.2;
  double tr = 0.1;
  std::string method = "cg";
  double alpha = 0.0;
  double lambda = 0.0;
  Index cg_iters = 5;
  std::string prior = "copy-init";
  double smooth_sigma = 1.0;
  std::string normal_path = "direct";
  bool exact_ndft = false;
  std::string phi;
  std::string test, ref;
  std::vector<Index> frame_list;
  std::string suite;
  int threads = 0;
};

auto input_dir(Options const &o) -> fs::path { return o.in.empty() ? fs::path(o.out) : fs::path(o.in); }

auto require_file(fs::path const &p) -> fs::path
{
  if (!fs::is_regular_file(p)) { throw DataError("missing input file " + p.string()); }
  return p;
}

void ensure_out(Options const &o) { fs::create_directories(o.out); }

void cmd_phantom(Options const &o)
{
  PhantomConfig c;
  c.nx = o.nx;
  c.ny = o.ny;
  c.frames = o.frames;
  c.max_rank = o.l_dim;
  c.motion_amplitude = o.motion;
  c.tr = o.tr;
  c.seed = o.seed;
  auto const ph = make_phantom(c);
  ensure_out(o);
  fs::path const out(o.out);
  write_tensor(out / "x.ncs", ph.x);
  write_tensor(out / "u_true.ncs", ph.u_true.u);
  write_tensor(out / "phi.ncs", ph.phi.array());
  fmt::print("phantom {}x{}, T={}, L={}\n", o.nx, o.ny, ph.phi.frames(), ph.phi.rank());
}

void cmd_basis(Options const &o)
{
  if (o.frames < 1) { throw UsageError("--frames must be >= 1"); }
  std::vector<double> t1, tau;
  Index const atoms = 300;
  for (Index i = 0; i < atoms; i++) {
    t1.push_back(0.05 * std::pow(3.0 / 0.05, static_cast<double>(i) / static_cast<double>(atoms - 1)));
  }
  for (Index t = 0; t < o.frames; t++) {
    tau.push_back(static_cast<double>(t) * o.tr);
  }
  auto const phi = basis_from_dictionary(ir_dictionary(t1, tau), o.l_dim);
  ensure_out(o);
  write_tensor(fs::path(o.out) / "phi.ncs", phi.array());
  fmt::print("basis L={}, T={}\n", phi.rank(), phi.frames());
}

void cmd_sim(Options const &o)
{
  auto const x = to_complex(read_tensor(require_file(input_dir(o) / "x.ncs")));
  if (x.rank() != 3) { throw DataError("x.ncs must be [nx, ny, T]"); }
  Index const samples = o.samples > 0 ? o.samples : 2 * x.dim(0);
  auto const traj = golden_angle_spokes(o.spokes, samples);
  auto const schedule = linear_schedule(o.spokes, o.rpf);
  if (schedule.frames != x.dim(2)) {
    throw DataError(fmt::format("{} spokes at {} per frame give {} frames, the phantom has {}", o.spokes, o.rpf,
                                schedule.frames, x.dim(2)));
  }
  auto const maps = make_coil_maps(o.coils, x.dim(0), x.dim(1));
  auto const b = simulate_acquisition(x, maps, traj, schedule, o.noise_sigma, o.seed, true);
  ensure_out(o);
  fs::path const out(o.out);
  write_tensor(out / "maps.ncs", maps.maps);
  write_tensor(out / "kspace.ncs", b.b);
  write_tensor(out / "traj.ncs", traj.to_array());
  write_tensor(out / "schedule.ncs", schedule.to_array());
  fmt::print("simulated {} coils x {} readouts x {} samples\n", o.coils, o.spokes, samples);
}

void cmd_recon(Options const &o)
{
  auto const method = parse_method(o.method);
  auto const path = parse_normal_path(o.normal_path);
  fs::path const in = input_dir(o);
  // Every input is read and checked before any computation.
  auto maps = to_complex(read_tensor(require_file(in / "maps.ncs")));
  auto b = to_complex(read_tensor(require_file(in / "kspace.ncs")));
  auto traj = Trajectory::from_array(to_real(read_tensor(require_file(in / "traj.ncs"))));
  auto phi = TemporalBasis(to_complex(read_tensor(require_file(o.phi.empty() ? in / "phi.ncs" : fs::path(o.phi)))));
  auto schedule = SamplingSchedule::from_array(to_real(read_tensor(require_file(in / "schedule.ncs"))), phi.frames());
  std::optional<SpatialFactor> prior_file;
  if (o.prior != "copy-init" && o.prior != "smooth-init") {
    prior_file = SpatialFactor{to_complex(read_tensor(require_file(o.prior)))};
  }
  Encoding E(CoilSensitivities(std::move(maps)), std::move(traj), std::move(schedule), std::move(phi),
             o.exact_ndft ? FourierMode::Exact : FourierMode::Gridding);
  KTData const data{std::move(b)};
  if (data.b.rank() != 3 || data.n_coils() != E.maps().n_coils() || data.n_readouts() != E.trajectory().n_readouts() ||
      data.n_samples() != E.trajectory().n_samples()) {
    throw DataError("kspace.ncs " + shape_string(data.b.shape()) + " does not match maps/trajectory");
  }
  if (prior_file &&
      (prior_file->u.rank() != 3 || prior_file->nx() != E.nx() || prior_file->ny() != E.ny() ||
       prior_file->rank() != E.rank())) {
    throw DataError("prior " + shape_string(prior_file->u.shape()) + " does not match [nx, ny, L]");
  }

  FieldOptions fo;
  fo.exact = o.exact_ndft;
  prepare_encoding(E, method, path, fo);
  auto const density = frame_quadrature_weights(E.trajectory(), E.schedule());
  SpatialFactor u_cnn;
  if (prior_file) {
    u_cnn = std::move(*prior_file);
  } else {
    auto const u0 = zero_filled_init(E, data, density);
    u_cnn = o.prior == "smooth-init" ? smooth_prior(u0, o.smooth_sigma) : u0;
  }
  ReconParams p;
  p.dc.alpha = o.alpha;
  p.dc.lambda = o.lambda;
  p.dc.cg_iters = o.cg_iters;
  p.dc.normal_path = path;
  p.admm_lambda = o.lambda;
  auto const u = reconstruct(method, E, data, u_cnn, density, p, build_ramp_preconditioner(E.nx(), E.ny()));
  for (auto const &v : u.u.span()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericalError("reconstruction produced non-finite values");
    }
  }
  ensure_out(o);
  auto const dst = fs::path(o.out) / fmt::format("u_{}.ncs", to_string(method));
  write_tensor(dst, u.u);
  fmt::print("wrote {}\n", dst.string());
}

void cmd_metrics(Options const &o)
{
  if (o.test.empty() || o.ref.empty()) { throw UsageError("metrics needs --test and --ref"); }
  auto test = to_complex(read_tensor(require_file(o.test)));
  auto ref = to_complex(read_tensor(require_file(o.ref)));
  std::string target = "factor";
  if (!o.phi.empty()) {
    // Both factors are expanded to frames with the same basis.
    TemporalBasis const phi(to_complex(read_tensor(require_file(o.phi))));
    test = select_frames(synthesize_frames(SpatialFactor{test}, phi), o.frame_list);
    ref = select_frames(synthesize_frames(SpatialFactor{ref}, phi), o.frame_list);
    target = "frames";
  }
  if (test.shape() != ref.shape()) {
    throw DataError("test " + shape_string(test.shape()) + " and reference " + shape_string(ref.shape()) + " differ");
  }
  MetricsReport rep;
  rep.rows.push_back({"test", target, std::to_string(o.seed), nrmse(test, ref), psnr(test, ref),
                      ref.rank() == 3 ? stack_ssim(test, ref) : ssim(magnitude(test), magnitude(ref)), 0.0, 0});
  std::cout << rep.csv();
  if (!o.in.empty() || o.out != ".") {
    ensure_out(o);
    std::ofstream(fs::path(o.out) / "metrics.csv") << rep.csv();
    if (ref.rank() == 3) { write_error_map_png(fs::path(o.out) / "error.png", test, ref); }
  }
}

void cmd_bench(Options const &o)
{
  Suite const suite = o.suite.empty() ? Suite{} : read_suite(require_file(o.suite));
  auto const res = run_benchmark(suite, o.out);
  std::cout << res.report.table();
}

} // namespace

auto run(int argc, char const *const *argv) -> int
{
  Options o;
  CLI::App app{"Subspace-constrained non-Cartesian dynamic MRI reconstruction"};
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "Thread cap (default: hardware count)")->check(CLI::NonNegativeNumber);

  auto out = [&](CLI::App *s) { s->add_option("--out", o.out, "Output directory"); };
  auto size = [&](CLI::App *s) {
    s->add_option("--nx", o.nx, "Image size x")->check(CLI::PositiveNumber);
    s->add_option("--ny", o.ny, "Image size y")->check(CLI::PositiveNumber);
  };

  auto *phantom = app.add_subcommand("phantom", "Dynamic phantom: x.ncs, u_true.ncs, phi.ncs");
  out(phantom);
  size(phantom);
  phantom->add_option("--frames", o.frames, "Frames T")->check(CLI::PositiveNumber);
  phantom->add_option("--l-dim", o.l_dim, "Largest subspace rank L")->check(CLI::PositiveNumber);
  phantom->add_option("--seed", o.seed, "Jitter seed (0 disables)");
  phantom->add_option("--motion", o.motion, "Motion amplitude, fraction of semi-axis");
  phantom->add_option("--tr", o.tr, "Seconds per frame");

  auto *basis = app.add_subcommand("basis", "Temporal basis from an inversion-recovery dictionary: phi.ncs");
  out(basis);
  basis->add_option("--frames", o.frames, "Frames T")->check(CLI::PositiveNumber);
  basis->add_option("--l-dim", o.l_dim, "Rank L")->check(CLI::PositiveNumber);
  basis->add_option("--tr", o.tr, "Seconds per frame");

  auto *sim = app.add_subcommand("sim", "Golden-angle acquisition of x.ncs");
  out(sim);
  sim->add_option("--in", o.in, "Directory holding x.ncs (default: --out)");
  sim->add_option("--coils", o.coils, "Receive coils")->check(CLI::PositiveNumber);
  sim->add_option("--spokes", o.spokes, "Readouts")->check(CLI::PositiveNumber);
  sim->add_option("--samples", o.samples, "Samples per readout (default 2 nx)")->check(CLI::NonNegativeNumber);
  sim->add_option("--readouts-per-frame", o.rpf, "Readouts per frame")->check(CLI::PositiveNumber);
  sim->add_option("--noise-sigma", o.noise_sigma, "Noise std relative to signal RMS")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", o.seed, "Noise seed");

  auto *recon = app.add_subcommand("recon", "Reconstruct u_<method>.ncs");
  out(recon);
  recon->add_option("--in", o.in, "Directory with maps, kspace, traj, schedule, phi (default: --out)");
  recon->add_option("--method", o.method, "zf|prior|gd|pgd|ds|cg|admm");
  recon->add_option("--alpha", o.alpha, "GD/PGD step");
  recon->add_option("--lambda", o.lambda, "DS/CG regularisation, ADMM wavelet weight");
  recon->add_option("--cg-iters", o.cg_iters, "CG iterations");
  recon->add_option("--prior", o.prior, "Prior factor file, copy-init or smooth-init");
  recon->add_option("--smooth-sigma", o.smooth_sigma, "Blur width for smooth-init, pixels");
  recon->add_option("--normal-path", o.normal_path, "direct|kernel|toeplitz");
  recon->add_option("--phi", o.phi, "Basis file (default: <in>/phi.ncs)");
  recon->add_flag("--exact-ndft", o.exact_ndft, "Exact NDFT instead of gridding");

  auto *metrics = app.add_subcommand("metrics", "NRMSE, PSNR, SSIM of --test against --ref");
  out(metrics);
  metrics->add_option("--test", o.test, "Test tensor")->required();
  metrics->add_option("--ref", o.ref, "Reference tensor")->required();
  metrics->add_option("--phi", o.phi, "Basis: compare frames U phi instead of factors");
  metrics->add_option("--frames", o.frame_list, "Frame subset")->delimiter(',');
  metrics->add_option("--seed", o.seed, "Seed label for the row");

  auto *bench = app.add_subcommand("bench", "Run a benchmark suite");
  out(bench);
  bench->add_option("--suite", o.suite, "key=value suite file (default: built-in suite)");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    app.exit(e);
    return 1;
  }

  if (o.threads > 0) { omp_set_num_threads(o.threads); }
  try {
    if (phantom->parsed()) {
      cmd_phantom(o);
    } else if (basis->parsed()) {
      cmd_basis(o);
    } else if (sim->parsed()) {
      cmd_sim(o);
    } else if (recon->parsed()) {
      cmd_recon(o);
    } else if (metrics->parsed()) {
      cmd_metrics(o);
    } else if (bench->parsed()) {
      cmd_bench(o);
    }
  } catch (UsageError const &e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 1;
  } catch (DataError const &e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  } catch (NumericalError const &e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return 3;
  } catch (std::filesystem::filesystem_error const &e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  } catch (std::exception const &e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 3;
  }
  return 0;
}

} // namespace ncsub::cli
