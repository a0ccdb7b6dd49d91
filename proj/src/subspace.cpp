#include "ncsub/subspace.hpp"
#include "ncsub/fft.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>

namespace ncsub {

namespace {
using CxMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
} // namespace

auto orthonormality_error(CxArray const &phi) -> double
{
  if (phi.rank() != 2) { throw DataError("temporal basis must be [L, T]"); }
  Eigen::Map<CxMat const> P(phi.data(), phi.dim(0), phi.dim(1));
  CxMat const G = P * P.adjoint() - CxMat::Identity(phi.dim(0), phi.dim(0));
  return G.norm();
}

TemporalBasis::TemporalBasis(CxArray phi, double tol)
  : phi_(std::move(phi))
{
  if (phi_.rank() != 2 || phi_.dim(0) < 1 || phi_.dim(1) < phi_.dim(0)) {
    throw DataError("temporal basis must be [L, T] with 1 <= L <= T, got " + shape_string(phi_.shape()));
  }
  auto const err = orthonormality_error(phi_);
  if (!(err <= tol)) {
    throw DataError("temporal basis rows are not orthonormal (|phi phi^H - I| = " + std::to_string(err) + ")");
  }
}

auto ir_signal(double t1, double tau) -> double { return 1.0 - 2.0 * std::exp(-tau / t1); }

auto ir_dictionary(std::span<double const> t1_values, std::span<double const> sample_times) -> RealArray
{
  if (t1_values.empty() || sample_times.empty()) { throw DataError("ir_dictionary: empty T1 or time grid"); }
  auto const A = static_cast<Index>(t1_values.size());
  auto const T = static_cast<Index>(sample_times.size());
  RealArray d({A, T});
  for (Index a = 0; a < A; a++) {
    if (!(t1_values[a] > 0.0)) { throw DataError("ir_dictionary: T1 must be positive"); }
    double nrm = 0.0;
    for (Index t = 0; t < T; t++) {
      if (!(sample_times[t] >= 0.0)) { throw DataError("ir_dictionary: sample times must be >= 0"); }
      d(a, t) = ir_signal(t1_values[a], sample_times[t]);
      nrm += d(a, t) * d(a, t);
    }
    nrm = std::sqrt(nrm);
    for (Index t = 0; t < T; t++) {
      d(a, t) /= nrm;
    }
  }
  return d;
}

auto basis_from_dictionary(RealArray const &dict, Index L) -> TemporalBasis
{
  if (dict.rank() != 2) { throw DataError("dictionary must be [atoms, T]"); }
  Index const A = dict.dim(0), T = dict.dim(1);
  if (L < 1 || L > std::min(A, T)) {
    throw DataError("basis rank " + std::to_string(L) + " outside [1, " + std::to_string(std::min(A, T)) + "]");
  }
  Eigen::Map<RealMat const> D(dict.data(), A, T);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullV);
  Eigen::MatrixXd const V = svd.matrixV();
  CxArray phi({L, T});
  for (Index l = 0; l < L; l++) {
    // Fix the sign so the largest-magnitude entry of each row is positive.
    Index imax = 0;
    for (Index t = 1; t < T; t++) {
      if (std::abs(V(t, l)) > std::abs(V(imax, l))) { imax = t; }
    }
    double const s = V(imax, l) < 0.0 ? -1.0 : 1.0;
    for (Index t = 0; t < T; t++) {
      phi(l, t) = s * V(t, l);
    }
  }
  return TemporalBasis(std::move(phi));
}

auto singular_values(RealArray const &dict) -> std::vector<double>
{
  Eigen::Map<RealMat const> D(dict.data(), dict.dim(0), dict.dim(1));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(D);
  auto const s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

auto identity_spokes(Index n_readouts) -> SpokeMap
{
  SpokeMap m;
  m.spoke_of.resize(static_cast<std::size_t>(n_readouts));
  m.representative.resize(static_cast<std::size_t>(n_readouts));
  for (Index r = 0; r < n_readouts; r++) {
    m.spoke_of[r] = r;
    m.representative[r] = r;
  }
  return m;
}

auto group_spokes(Trajectory const &traj) -> SpokeMap
{
  std::map<std::vector<double>, Index> seen;
  SpokeMap m;
  m.spoke_of.resize(static_cast<std::size_t>(traj.n_readouts()));
  for (Index r = 0; r < traj.n_readouts(); r++) {
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(2 * traj.n_samples()));
    for (auto const &k : traj.readout(r)) {
      key.push_back(k.kx);
      key.push_back(k.ky);
    }
    auto [it, inserted] = seen.try_emplace(std::move(key), m.n_spokes());
    if (inserted) { m.representative.push_back(r); }
    m.spoke_of[r] = it->second;
  }
  return m;
}

auto spoke_kernels(SamplingSchedule const &schedule, TemporalBasis const &phi, SpokeMap spokes) -> SpokeKernelSet
{
  Index const L = phi.rank();
  Index const S = spokes.n_spokes();
  if (static_cast<Index>(spokes.spoke_of.size()) != schedule.n_readouts()) {
    throw DataError("spoke map and schedule readout counts differ");
  }
  if (schedule.frames != phi.frames()) { throw DataError("schedule frame count does not match the basis"); }
  CxArray K({S, L, L});
  for (Index m = 0; m < schedule.n_readouts(); m++) {
    Index const s = spokes.spoke_of[m];
    if (s < 0 || s >= S) { throw DataError("spoke index " + std::to_string(s) + " out of range"); }
    Index const t = schedule[m];
    for (Index i = 0; i < L; i++) {
      Cx const pi = phi(i, t);
      for (Index j = 0; j < L; j++) {
        K(s, i, j) += pi * std::conj(phi(j, t));
      }
    }
  }
  return {std::move(K), std::move(spokes)};
}

auto ToeplitzKernelField::max_norm() const -> double
{
  double mx = 0.0;
  for (Index n = 0; n < locations(); n++) {
    Eigen::Map<CxMat const> W(w.data() + n * L * L, L, L);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W, Eigen::EigenvaluesOnly);
    mx = std::max(mx, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return mx;
}

auto toeplitz_block_kernels(Trajectory const &traj, SamplingSchedule const &schedule, TemporalBasis const &phi,
                            Index nx, Index ny, FieldOptions opts) -> ToeplitzKernelField
{
  if (schedule.n_readouts() != traj.n_readouts()) { throw DataError("schedule and trajectory readout counts differ"); }
  if (schedule.frames != phi.frames()) { throw DataError("schedule frame count does not match the basis"); }
  Index const L = phi.rank();
  auto const bytes = static_cast<std::size_t>(4 * nx * ny * L * L) * sizeof(Cx);
  if (bytes > opts.byte_budget) {
    throw DataError("Toeplitz kernel field needs " + std::to_string(bytes) + " bytes, over the budget of " +
                    std::to_string(opts.byte_budget));
  }

  // One weight column per upper-triangle pair (i <= j).
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < L; i++) {
    for (Index j = i; j < L; j++) {
      pairs.emplace_back(i, j);
    }
  }
  Index const P = static_cast<Index>(pairs.size());
  Index const S = traj.n_samples();
  Index const M = traj.n_readouts() * S;
  CxArray weights({M, P});
  for (Index m = 0; m < traj.n_readouts(); m++) {
    Index const t = schedule[m];
    for (Index p = 0; p < P; p++) {
      auto const [i, j] = pairs[p];
      Cx const w = std::conj(phi(i, t)) * phi(j, t);
      for (Index s = 0; s < S; s++) {
        weights((m * S + s), p) = w;
      }
    }
  }

  auto q = opts.exact ? psf_diagonals(traj.coords(), weights, nx, ny)
                      : psf_diagonals_gridded(traj.coords(), weights, nx, ny, opts.gridding);

  ToeplitzKernelField f{CxArray({2 * nx, 2 * ny, L, L}), nx, ny, L};
  Index const N = 4 * nx * ny;
  for (Index n = 0; n < N; n++) {
    Cx *W = f.w.data() + n * L * L;
    for (Index p = 0; p < P; p++) {
      auto const [i, j] = pairs[p];
      Cx const v = q[n * P + p];
      W[i * L + j] = v;
      W[j * L + i] = std::conj(v);
      if (i == j) { W[i * L + i] = v.real(); }
    }
  }
  return f;
}

namespace {

auto check_field_input(ToeplitzKernelField const &field, CxArray const &y) -> void
{
  if (y.rank() != 3 || y.dim(0) != field.nx || y.dim(1) != field.ny || y.dim(2) != field.L) {
    throw DataError("coil factor " + shape_string(y.shape()) + " does not match kernel field [" +
                    std::to_string(field.nx) + ", " + std::to_string(field.ny) + ", " + std::to_string(field.L) +
                    "]");
  }
}

template <typename Op>
auto field_sandwich(ToeplitzKernelField const &field, CxArray const &y, Op &&op) -> CxArray
{
  check_field_input(field, y);
  Index const px = 2 * field.nx, py = 2 * field.ny;
  auto padded = zero_pad_embed(y);
  fft::forward(padded.data(), px, py, field.L);
  op(padded.span());
  fft::inverse(padded.data(), px, py, field.L);
  double const scale = 1.0 / static_cast<double>(px * py);
  for (auto &v : padded.span()) {
    v *= scale;
  }
  return crop_center(padded);
}

} // namespace

auto field_apply(ToeplitzKernelField const &field, CxArray const &y) -> CxArray
{
  return field_sandwich(field, y, [&](std::span<Cx> k) { kernels::field_multiply(field.w.span(), field.L, k); });
}

auto field_inverse_apply(ToeplitzKernelField const &field, double lambda, CxArray const &y) -> CxArray
{
  return field_sandwich(field, y, [&](std::span<Cx> k) { kernels::field_solve(field.w.span(), field.L, lambda, k); });
}

auto diagnose(ToeplitzKernelField const &field) -> FieldDiagnostics
{
  FieldDiagnostics d;
  d.min_eigenvalue = std::numeric_limits<double>::infinity();
  d.max_eigenvalue = -std::numeric_limits<double>::infinity();
  Index const L = field.L;
  for (Index n = 0; n < field.locations(); n++) {
    Eigen::Map<CxMat const> W(field.w.data() + n * L * L, L, L);
    double const nrm = W.norm();
    if (nrm > 0.0) { d.max_hermitian_error = std::max(d.max_hermitian_error, (W - W.adjoint()).norm() / nrm); }
    Eigen::MatrixXcd const H = 0.5 * (W + W.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues().minCoeff());
    d.max_eigenvalue = std::max(d.max_eigenvalue, es.eigenvalues().maxCoeff());
  }
  return d;
}

} // namespace ncsub
