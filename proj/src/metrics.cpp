#include "ncsub/metrics.hpp"
#include "ncsub/linalg.hpp"

#include <fmt/format.h>
#include <png.h>

#include <cmath>
#include <fstream>
#include <map>

namespace ncsub {

namespace {

void check_same_shape(CxArray const &a, CxArray const &b)
{
  if (a.shape() != b.shape()) {
    throw DataError("shape mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

} // namespace

auto nrmse(CxArray const &test, CxArray const &ref) -> double
{
  check_same_shape(test, ref);
  double const r = la::norm(ref);
  if (!(r > 0.0)) { throw DataError("nrmse: reference is zero"); }
  return la::dist(test, ref) / r;
}

auto psnr(CxArray const &test, CxArray const &ref) -> double
{
  check_same_shape(test, ref);
  if (ref.size() == 0) { throw DataError("psnr: empty input"); }
  double peak = 0.0, se = 0.0;
  for (Index i = 0; i < ref.size(); i++) {
    double const a = std::abs(ref[i]);
    double const d = std::abs(test[i]) - a;
    peak = std::max(peak, a);
    se += d * d;
  }
  if (se == 0.0) { return std::numeric_limits<double>::infinity(); }
  double const mse = se / static_cast<double>(ref.size());
  return 10.0 * std::log10(peak * peak / mse);
}

auto magnitude(CxArray const &a) -> RealArray
{
  RealArray m(a.shape());
  for (Index i = 0; i < a.size(); i++) {
    m[i] = std::abs(a[i]);
  }
  return m;
}

auto ssim(RealArray const &test, RealArray const &ref, SsimOptions const &o) -> double
{
  if (test.shape() != ref.shape() || ref.rank() != 2) { throw DataError("ssim: needs two images of equal shape"); }
  Index const nx = ref.dim(0), ny = ref.dim(1), w = o.window;
  if (nx < w || ny < w) { throw DataError("ssim: image smaller than the " + std::to_string(w) + "-pixel window"); }
  double dr = o.dynamic_range;
  if (dr <= 0.0) {
    for (auto v : ref.span()) {
      dr = std::max(dr, std::abs(v));
    }
  }
  double const c1 = (o.k1 * dr) * (o.k1 * dr), c2 = (o.k2 * dr) * (o.k2 * dr);

  std::vector<double> g(static_cast<std::size_t>(w));
  double gs = 0.0;
  for (Index i = 0; i < w; i++) {
    double const d = static_cast<double>(i - w / 2);
    g[i] = std::exp(-0.5 * d * d / (o.sigma * o.sigma));
    gs += g[i];
  }
  for (auto &v : g) {
    v /= gs;
  }

  // Separable valid-mode filtering of x, y, x^2, y^2, xy.
  Index const ox = nx - w + 1, oy = ny - w + 1;
  auto filter = [&](auto const &f) {
    std::vector<double> rows(static_cast<std::size_t>(ox * ny));
    for (Index i = 0; i < ox; i++) {
      for (Index j = 0; j < ny; j++) {
        double acc = 0.0;
        for (Index k = 0; k < w; k++) {
          acc += g[k] * f(i + k, j);
        }
        rows[i * ny + j] = acc;
      }
    }
    std::vector<double> out(static_cast<std::size_t>(ox * oy));
    for (Index i = 0; i < ox; i++) {
      for (Index j = 0; j < oy; j++) {
        double acc = 0.0;
        for (Index k = 0; k < w; k++) {
          acc += g[k] * rows[i * ny + j + k];
        }
        out[i * oy + j] = acc;
      }
    }
    return out;
  };
  auto const mx = filter([&](Index i, Index j) { return test(i, j); });
  auto const my = filter([&](Index i, Index j) { return ref(i, j); });
  auto const xx = filter([&](Index i, Index j) { return test(i, j) * test(i, j); });
  auto const yy = filter([&](Index i, Index j) { return ref(i, j) * ref(i, j); });
  auto const xy = filter([&](Index i, Index j) { return test(i, j) * ref(i, j); });

  double sum = 0.0;
  for (std::size_t p = 0; p < mx.size(); p++) {
    double const vx = xx[p] - mx[p] * mx[p];
    double const vy = yy[p] - my[p] * my[p];
    double const cxy = xy[p] - mx[p] * my[p];
    sum += ((2.0 * mx[p] * my[p] + c1) * (2.0 * cxy + c2)) /
           ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
  }
  return sum / static_cast<double>(mx.size());
}

auto slice_last(CxArray const &a, Index k) -> CxArray
{
  if (a.rank() != 3 || k < 0 || k >= a.dim(2)) { throw DataError("slice_last: bad index or shape"); }
  Index const nx = a.dim(0), ny = a.dim(1), K = a.dim(2);
  CxArray s({nx, ny});
  for (Index p = 0; p < nx * ny; p++) {
    s[p] = a[p * K + k];
  }
  return s;
}

auto stack_ssim(CxArray const &test, CxArray const &ref) -> double
{
  check_same_shape(test, ref);
  if (ref.rank() != 3) { throw DataError("stack_ssim: expects [nx, ny, K]"); }
  SsimOptions o;
  for (auto const &v : ref.span()) {
    o.dynamic_range = std::max(o.dynamic_range, std::abs(v));
  }
  if (!(o.dynamic_range > 0.0)) { throw DataError("ssim: reference is zero"); }
  double s = 0.0;
  for (Index k = 0; k < ref.dim(2); k++) {
    s += ssim(magnitude(slice_last(test, k)), magnitude(slice_last(ref, k)), o);
  }
  return s / static_cast<double>(ref.dim(2));
}

auto select_frames(CxArray const &x, std::vector<Index> const &frames) -> CxArray
{
  if (x.rank() != 3) { throw DataError("select_frames: expects [nx, ny, T]"); }
  if (frames.empty()) { return x; }
  Index const P = x.dim(0) * x.dim(1), T = x.dim(2), K = static_cast<Index>(frames.size());
  CxArray out({x.dim(0), x.dim(1), K});
  for (Index k = 0; k < K; k++) {
    if (frames[k] < 0 || frames[k] >= T) {
      throw DataError("frame " + std::to_string(frames[k]) + " outside [0, " + std::to_string(T) + ")");
    }
    for (Index p = 0; p < P; p++) {
      out[p * K + k] = x[p * T + frames[k]];
    }
  }
  return out;
}

void write_png_gray8(std::filesystem::path const &path, Index width, Index height,
                     std::vector<std::uint8_t> const &pixels)
{
  if (width < 1 || height < 1 || static_cast<Index>(pixels.size()) != width * height) {
    throw DataError("png: pixel buffer does not match the image size");
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), static_cast<png_int_32>(width), nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + img.message);
  }
}

void write_error_map_png(std::filesystem::path const &path, CxArray const &test, CxArray const &ref)
{
  check_same_shape(test, ref);
  if (ref.rank() != 3) { throw DataError("error map expects [nx, ny, frames]"); }
  Index const nx = ref.dim(0), ny = ref.dim(1), K = ref.dim(2);
  double peak = 0.0;
  for (auto const &v : ref.span()) {
    peak = std::max(peak, std::abs(v));
  }
  double const top = 0.5 * peak;
  // Image rows run along x, frames tiled along the width.
  Index const width = ny * K, height = nx;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width * height));
  for (Index k = 0; k < K; k++) {
    for (Index ix = 0; ix < nx; ix++) {
      for (Index iy = 0; iy < ny; iy++) {
        Index const i = (ix * ny + iy) * K + k;
        double const e = std::abs(std::abs(test[i]) - std::abs(ref[i]));
        double const v = top > 0.0 ? std::clamp(e / top, 0.0, 1.0) : 0.0;
        px[static_cast<std::size_t>(ix * width + k * ny + iy)] = static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
    }
  }
  write_png_gray8(path, width, height, px);
}

void MetricsReport::summarize()
{
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<MetricsRow const *>> groups;
  for (auto const &r : rows) {
    if (r.seed == "mean" || r.seed == "std") { continue; }
    auto const key = std::make_pair(r.method, r.target);
    if (!groups.contains(key)) { order.push_back(key); }
    groups[key].push_back(&r);
  }
  std::vector<MetricsRow> extra;
  for (auto const &key : order) {
    auto const &g = groups[key];
    auto const n = static_cast<double>(g.size());
    auto stat = [&](auto field) {
      double m = 0.0;
      for (auto *r : g) {
        m += field(*r);
      }
      m /= n;
      double v = 0.0;
      for (auto *r : g) {
        v += (field(*r) - m) * (field(*r) - m);
      }
      return std::make_pair(m, std::sqrt(v / n));
    };
    auto const e = stat([](MetricsRow const &r) { return r.nrmse; });
    auto const p = stat([](MetricsRow const &r) { return r.psnr_db; });
    auto const s = stat([](MetricsRow const &r) { return r.ssim; });
    auto const t = stat([](MetricsRow const &r) { return r.wall_time_s; });
    auto const a = stat([](MetricsRow const &r) { return static_cast<double>(r.peak_alloc_bytes); });
    extra.push_back({key.first, key.second, "mean", e.first, p.first, s.first, t.first,
                     static_cast<std::size_t>(std::llround(a.first))});
    extra.push_back({key.first, key.second, "std", e.second, p.second, s.second, t.second,
                     static_cast<std::size_t>(std::llround(a.second))});
  }
  rows.insert(rows.end(), extra.begin(), extra.end());
}

auto MetricsReport::csv() const -> std::string
{
  std::string out = std::string(kCsvHeader) + "\n";
  for (auto const &r : rows) {
    out += fmt::format("{},{},{},{:.12g},{:.12g},{:.12g},{:.6g},{}\n", r.method, r.target, r.seed, r.nrmse,
                       r.psnr_db, r.ssim, r.wall_time_s, r.peak_alloc_bytes);
  }
  return out;
}

auto MetricsReport::table() const -> std::string
{
  std::string out;
  for (std::string const target : {"factor", "frames"}) {
    std::vector<std::string> methods;
    std::map<std::string, MetricsRow> mean, sd;
    for (auto const &r : rows) {
      if (r.target != target) { continue; }
      if (r.seed == "mean") {
        methods.push_back(r.method);
        mean[r.method] = r;
      } else if (r.seed == "std") {
        sd[r.method] = r;
      }
    }
    if (methods.empty()) { continue; }
    out += fmt::format("target: {}\n{:<8}", target, "");
    for (auto const &m : methods) {
      out += fmt::format("{:>20}", m);
    }
    out += "\n";
    auto line = [&](char const *name, auto field, char const *f) {
      out += fmt::format("{:<8}", name);
      for (auto const &m : methods) {
        out += fmt::format("{:>20}", fmt::format(fmt::runtime(f), field(mean[m]), field(sd[m])));
      }
      out += "\n";
    };
    line("NRMSE", [](MetricsRow const &r) { return r.nrmse; }, "{:.4f} ({:.4f})");
    line("PSNR", [](MetricsRow const &r) { return r.psnr_db; }, "{:.2f} ({:.2f})");
    line("SSIM", [](MetricsRow const &r) { return r.ssim; }, "{:.4f} ({:.4f})");
    line("Time", [](MetricsRow const &r) { return r.wall_time_s; }, "{:.4f} ({:.4f})");
    out += "\n";
  }
  return out;
}

} // namespace ncsub
