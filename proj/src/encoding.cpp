#include "ncsub/encoding.hpp"
#include "ncsub/fft.hpp"

#include <cmath>

namespace ncsub {

CoilSensitivities::CoilSensitivities(CxArray m, double tol)
  : maps(std::move(m))
{
  if (maps.rank() != 3 || maps.dim(0) < 1) { throw DataError("coil maps must be [coils, nx, ny]"); }
  Index const C = maps.dim(0), P = maps.dim(1) * maps.dim(2);
  for (Index p = 0; p < P; p++) {
    double s = 0.0;
    for (Index c = 0; c < C; c++) {
      s += std::norm(maps[c * P + p]);
    }
    if (s > 0.0 && !(std::abs(s - 1.0) <= tol)) {
      throw DataError("coil maps are not pixelwise normalised (sum |s|^2 = " + std::to_string(s) + ")");
    }
  }
}

auto normalize_coil_maps(CxArray maps) -> CoilSensitivities
{
  if (maps.rank() != 3) { throw DataError("coil maps must be [coils, nx, ny]"); }
  Index const C = maps.dim(0), P = maps.dim(1) * maps.dim(2);
  for (Index p = 0; p < P; p++) {
    double s = 0.0;
    for (Index c = 0; c < C; c++) {
      s += std::norm(maps[c * P + p]);
    }
    if (s > 0.0) {
      double const inv = 1.0 / std::sqrt(s);
      for (Index c = 0; c < C; c++) {
        maps[c * P + p] *= inv;
      }
    }
  }
  return CoilSensitivities(std::move(maps));
}

auto zeros_like(SpatialFactor const &u) -> SpatialFactor { return {CxArray(u.u.shape())}; }

auto apply_S(SpatialFactor const &u, CoilSensitivities const &maps) -> CxArray
{
  if (u.u.rank() != 3 || u.nx() != maps.nx() || u.ny() != maps.ny()) {
    throw DataError("spatial factor " + shape_string(u.u.shape()) + " does not match coil maps " +
                    shape_string(maps.maps.shape()));
  }
  Index const C = maps.n_coils(), P = u.nx() * u.ny(), L = u.rank();
  CxArray y({C, u.nx(), u.ny(), L});
  for (Index c = 0; c < C; c++) {
    for (Index p = 0; p < P; p++) {
      Cx const s = maps.maps[c * P + p];
      for (Index l = 0; l < L; l++) {
        y[(c * P + p) * L + l] = s * u.u[p * L + l];
      }
    }
  }
  return y;
}

auto combine_S(CxArray const &y, CoilSensitivities const &maps) -> SpatialFactor
{
  if (y.rank() != 4 || y.dim(0) != maps.n_coils() || y.dim(1) != maps.nx() || y.dim(2) != maps.ny()) {
    throw DataError("coil factors " + shape_string(y.shape()) + " do not match coil maps " +
                    shape_string(maps.maps.shape()));
  }
  Index const C = maps.n_coils(), P = maps.nx() * maps.ny(), L = y.dim(3);
  SpatialFactor u{CxArray({maps.nx(), maps.ny(), L})};
  // Coil-outer accumulation keeps the summation order fixed.
  for (Index c = 0; c < C; c++) {
    for (Index p = 0; p < P; p++) {
      Cx const s = std::conj(maps.maps[c * P + p]);
      for (Index l = 0; l < L; l++) {
        u.u[p * L + l] += s * y[(c * P + p) * L + l];
      }
    }
  }
  return u;
}

auto to_string(NormalPath p) -> char const *
{
  switch (p) {
  case NormalPath::Direct: return "direct";
  case NormalPath::SpokeKernel: return "kernel";
  case NormalPath::Toeplitz: return "toeplitz";
  }
  return "?";
}

auto parse_normal_path(std::string const &s) -> NormalPath
{
  if (s == "direct") { return NormalPath::Direct; }
  if (s == "kernel" || s == "spoke-kernel") { return NormalPath::SpokeKernel; }
  if (s == "toeplitz") { return NormalPath::Toeplitz; }
  throw UsageError("unknown normal path '" + s + "' (expected direct|kernel|toeplitz)");
}

// Fourier sampling of an L-channel image at a fixed coordinate set.
class Encoding::Fourier
{
public:
  Fourier(std::vector<KPoint> coords, Index nx, Index ny, FourierMode mode, GriddingOptions opts)
    : coords_(std::move(coords))
    , nx_(nx)
    , ny_(ny)
  {
    if (mode == FourierMode::Gridding) {
      nufft_.emplace(std::make_shared<GriddingPlan const>(nx, ny, opts), coords_);
    }
  }

  auto n_samples() const -> Index { return static_cast<Index>(coords_.size()); }

  auto forward(CxArray const &image) const -> CxArray
  {
    if (nufft_) { return nufft_->forward(image); }
    return ndft_forward(image, coords_);
  }

  auto adjoint(CxArray const &samples) const -> CxArray
  {
    if (nufft_) { return nufft_->adjoint(samples); }
    return ndft_adjoint(samples, coords_, nx_, ny_);
  }

private:
  std::vector<KPoint> coords_;
  Index nx_, ny_;
  std::optional<Nufft> nufft_;
};

Encoding::Encoding(CoilSensitivities maps, Trajectory traj, SamplingSchedule schedule, TemporalBasis phi,
                   FourierMode mode, GriddingOptions gridding)
  : maps_(std::move(maps))
  , traj_(std::move(traj))
  , schedule_(std::move(schedule))
  , phi_(std::move(phi))
  , mode_(mode)
  , gridding_(gridding)
{
  if (schedule_.n_readouts() != traj_.n_readouts()) {
    throw DataError("schedule has " + std::to_string(schedule_.n_readouts()) + " readouts, trajectory has " +
                    std::to_string(traj_.n_readouts()));
  }
  if (schedule_.frames != phi_.frames()) {
    throw DataError("schedule spans " + std::to_string(schedule_.frames) + " frames, basis has " +
                    std::to_string(phi_.frames()));
  }
  std::vector<KPoint> all(traj_.coords().begin(), traj_.coords().end());
  readouts_ = std::make_shared<Fourier const>(std::move(all), nx(), ny(), mode_, gridding_);
}

void Encoding::prepare_spoke_kernels(std::optional<SpokeMap> spokes)
{
  auto map = spokes ? std::move(*spokes) : group_spokes(traj_);
  if (static_cast<Index>(map.spoke_of.size()) != traj_.n_readouts()) {
    throw DataError("spoke map does not cover every readout");
  }
  for (Index m = 0; m < traj_.n_readouts(); m++) {
    auto const a = traj_.readout(m);
    auto const b = traj_.readout(map.representative[map.spoke_of[m]]);
    for (std::size_t j = 0; j < a.size(); j++) {
      if (a[j].kx != b[j].kx || a[j].ky != b[j].ky) {
        throw DataError("readout " + std::to_string(m) + " does not share its spoke's coordinates");
      }
    }
  }
  if (map.n_spokes() == traj_.n_readouts()) {
    spokes_ = readouts_;
  } else {
    std::vector<KPoint> rep;
    rep.reserve(static_cast<std::size_t>(map.n_spokes() * traj_.n_samples()));
    for (auto r : map.representative) {
      auto const ro = traj_.readout(r);
      rep.insert(rep.end(), ro.begin(), ro.end());
    }
    spokes_ = std::make_shared<Fourier const>(std::move(rep), nx(), ny(), mode_, gridding_);
  }
  spoke_set_ = spoke_kernels(schedule_, phi_, std::move(map));
}

void Encoding::prepare_toeplitz(FieldOptions opts)
{
  field_ = std::make_shared<ToeplitzKernelField const>(toeplitz_block_kernels(traj_, schedule_, phi_, nx(), ny(), opts));
}

void Encoding::set_toeplitz_field(std::shared_ptr<ToeplitzKernelField const> field)
{
  if (!field || field->nx != nx() || field->ny != ny() || field->L != rank()) {
    throw DataError("kernel field does not match the encoding geometry");
  }
  field_ = std::move(field);
}

auto Encoding::spoke_set() const -> SpokeKernelSet const &
{
  if (!spoke_set_) { throw DataError("spoke kernels have not been prepared"); }
  return *spoke_set_;
}

auto Encoding::field() const -> ToeplitzKernelField const &
{
  if (!field_) { throw DataError("Toeplitz kernel field has not been prepared"); }
  return *field_;
}

void Encoding::check_factor(SpatialFactor const &u) const
{
  if (u.u.rank() != 3 || u.nx() != nx() || u.ny() != ny() || u.rank() != rank()) {
    throw DataError("spatial factor " + shape_string(u.u.shape()) + " does not match encoding [" +
                    std::to_string(nx()) + ", " + std::to_string(ny()) + ", " + std::to_string(rank()) + "]");
  }
}

void Encoding::check_data(KTData const &b) const
{
  if (b.b.rank() != 3 || b.n_coils() != maps_.n_coils() || b.n_readouts() != traj_.n_readouts() ||
      b.n_samples() != traj_.n_samples()) {
    throw DataError("k-space data " + shape_string(b.b.shape()) + " does not match [" +
                    std::to_string(maps_.n_coils()) + ", " + std::to_string(traj_.n_readouts()) + ", " +
                    std::to_string(traj_.n_samples()) + "]");
  }
}

auto Encoding::single_forward(CxArray const &y) const -> CxArray
{
  Index const R = traj_.n_readouts(), S = traj_.n_samples(), L = rank();
  auto const z = readouts_->forward(y); // [R*S][L]
  CxArray b({R, S});
  for (Index m = 0; m < R; m++) {
    Index const t = schedule_[m];
    for (Index s = 0; s < S; s++) {
      Cx acc{};
      for (Index l = 0; l < L; l++) {
        acc += z[(m * S + s) * L + l] * phi_(l, t);
      }
      b[m * S + s] = acc;
    }
  }
  return b;
}

auto Encoding::single_adjoint(Cx const *b, double const *weights) const -> CxArray
{
  Index const R = traj_.n_readouts(), S = traj_.n_samples(), L = rank();
  CxArray z({R * S, L});
  for (Index m = 0; m < R; m++) {
    Index const t = schedule_[m];
    for (Index s = 0; s < S; s++) {
      Cx const v = weights ? b[m * S + s] * weights[m * S + s] : b[m * S + s];
      for (Index l = 0; l < L; l++) {
        z[(m * S + s) * L + l] = v * std::conj(phi_(l, t));
      }
    }
  }
  return readouts_->adjoint(z);
}

auto Encoding::forward(SpatialFactor const &u) const -> KTData
{
  check_factor(u);
  return coil_forward(apply_S(u, maps_));
}

auto Encoding::adjoint(KTData const &b) const -> SpatialFactor { return combine_S(coil_adjoint(b), maps_); }

auto Encoding::weighted_adjoint(KTData const &b, DensityWeights const &d) const -> SpatialFactor
{
  check_data(b);
  if (d.w.rank() != 2 || d.w.dim(0) != traj_.n_readouts() || d.w.dim(1) != traj_.n_samples()) {
    throw DataError("density weights " + shape_string(d.w.shape()) + " do not match the trajectory");
  }
  Index const C = maps_.n_coils(), RS = traj_.n_readouts() * traj_.n_samples(), P = nx() * ny() * rank();
  CxArray y({C, nx(), ny(), rank()});
  for (Index c = 0; c < C; c++) {
    auto const img = single_adjoint(b.b.data() + c * RS, d.w.data());
    std::copy(img.data(), img.data() + P, y.data() + c * P);
  }
  return combine_S(y, maps_);
}

auto Encoding::coil_forward(CxArray const &y) const -> KTData
{
  Index const C = maps_.n_coils(), R = traj_.n_readouts(), S = traj_.n_samples(), L = rank();
  if (y.rank() != 4 || y.dim(0) != C || y.dim(1) != nx() || y.dim(2) != ny() || y.dim(3) != L) {
    throw DataError("coil factors " + shape_string(y.shape()) + " do not match the encoding");
  }
  Index const P = nx() * ny() * L;
  KTData out{CxArray({C, R, S})};
  for (Index c = 0; c < C; c++) {
    CxArray yc({nx(), ny(), L});
    std::copy(y.data() + c * P, y.data() + (c + 1) * P, yc.data());
    auto const bc = single_forward(yc);
    std::copy(bc.data(), bc.data() + R * S, out.b.data() + c * R * S);
  }
  return out;
}

auto Encoding::coil_adjoint(KTData const &b) const -> CxArray
{
  check_data(b);
  Index const C = maps_.n_coils(), RS = traj_.n_readouts() * traj_.n_samples(), P = nx() * ny() * rank();
  CxArray y({C, nx(), ny(), rank()});
  for (Index c = 0; c < C; c++) {
    auto const img = single_adjoint(b.b.data() + c * RS, nullptr);
    std::copy(img.data(), img.data() + P, y.data() + c * P);
  }
  return y;
}

auto Encoding::single_normal(CxArray const &y, NormalPath path) const -> CxArray
{
  switch (path) {
  case NormalPath::Direct: {
    auto const b = single_forward(y);
    return single_adjoint(b.data(), nullptr);
  }
  case NormalPath::SpokeKernel: {
    auto const &set = spoke_set();
    auto z = spokes_->forward(y); // [spokes * S][L]
    kernels::spoke_right_multiply(set.kernels.span(), rank(), traj_.n_samples(), z.span());
    return spokes_->adjoint(z);
  }
  case NormalPath::Toeplitz: return field_apply(field(), y);
  }
  throw DataError("unknown normal path");
}

auto Encoding::coil_normal(CxArray const &y, NormalPath path) const -> CxArray
{
  Index const C = maps_.n_coils(), L = rank();
  if (y.rank() != 4 || y.dim(0) != C || y.dim(1) != nx() || y.dim(2) != ny() || y.dim(3) != L) {
    throw DataError("coil factors " + shape_string(y.shape()) + " do not match the encoding");
  }
  Index const P = nx() * ny() * L;
  CxArray out(y.shape());
  for (Index c = 0; c < C; c++) {
    CxArray yc({nx(), ny(), L});
    std::copy(y.data() + c * P, y.data() + (c + 1) * P, yc.data());
    auto const nc = single_normal(yc, path);
    std::copy(nc.data(), nc.data() + P, out.data() + c * P);
  }
  return out;
}

auto Encoding::normal(SpatialFactor const &u, NormalPath path) const -> SpatialFactor
{
  check_factor(u);
  return combine_S(coil_normal(apply_S(u, maps_), path), maps_);
}

} // namespace ncsub
