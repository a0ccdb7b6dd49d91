#pragma once

#include "metrics.hpp"
#include "phantom.hpp"
#include "solvers.hpp"

#include <filesystem>
#include <map>
#include <memory>

namespace ncsub {

enum class Method
{
  ZeroFilled,
  Prior, // U_cnn passed through without DC
  GD,
  PGD,
  DS,
  CG,
  ADMM,
};

auto to_string(Method m) -> char const *;
auto parse_method(std::string const &s) -> Method;

struct ReconParams
{
  DCConfig dc;
  double admm_lambda = 0.0;
  double admm_rho = 0.0; // <= 0 picks the normal-operator norm estimate
  Index admm_iters = 20;
  Index admm_inner = 10;
};

// Builds whatever kernels the method and normal path need.
void prepare_encoding(Encoding &E, Method m, NormalPath path, FieldOptions const &field = {});

// Dispatch to the solver for m. u_cnn is ignored by zf; admm starts from u_cnn.
auto reconstruct(Method m, Encoding const &E, KTData const &b, SpatialFactor const &u_cnn, DensityWeights const &d,
                 ReconParams const &p, Preconditioner const &precond) -> SpatialFactor;

enum class PriorKind
{
  Noisy,
  CopyInit,
  SmoothInit,
};

auto parse_prior(std::string const &s) -> PriorKind;

struct Suite
{
  Index nx = 32;
  Index ny = 32;
  Index coils = 4;
  Index spokes = 96;
  Index samples = 64;
  Index readouts_per_frame = 4;
  Index l_dim = 4;
  double motion = 0.2;
  double noise_sigma = 0.02;
  PriorKind prior = PriorKind::Noisy;
  double prior_snr = 10.0;
  double smooth_sigma = 1.0;
  std::vector<Method> methods = {Method::ZeroFilled, Method::Prior, Method::GD, Method::PGD, Method::DS, Method::CG};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::uint64_t validation_seed = 100;
  NormalPath normal_path = NormalPath::Direct;
  bool exact_ndft = false;
  Index cg_iters = 5;
  std::vector<Index> frames; // frame subset for frame metrics, empty = all
  Index timing_reps = 5;
  bool error_maps = true;
};

// key=value lines, '#' starts a comment. Unknown keys are usage errors.
auto parse_suite(std::string const &text) -> Suite;
auto read_suite(std::filesystem::path const &path) -> Suite;

// One seeded instance of the suite: simulated data, operators and priors.
struct SuiteCase
{
  Simulation sim;
  std::unique_ptr<Encoding> E;
  DensityWeights density;
  SpatialFactor u0;
  SpatialFactor u_cnn;
  Preconditioner precond;
};

auto make_case(Suite const &suite, std::uint64_t seed) -> SuiteCase;

// Parameters for every method of the suite, tuned by grid search for the
// smallest factor NRMSE on the validation seed.
auto tune_suite(Suite const &suite, SuiteCase const &validation) -> std::map<Method, ReconParams>;

struct BenchResult
{
  MetricsReport report;
  std::map<Method, ReconParams> params;
};

// Runs the suite, writes metrics.csv, table.txt, params.txt and error maps
// into out_dir (created if needed).
auto run_benchmark(Suite const &suite, std::filesystem::path const &out_dir) -> BenchResult;

} // namespace ncsub
