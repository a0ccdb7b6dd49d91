#pragma once

#include "encoding.hpp"

#include <filesystem>
#include <limits>

namespace ncsub {

// |test - ref| / |ref| over all complex entries.
auto nrmse(CxArray const &test, CxArray const &ref) -> double;

// On magnitudes: 10 log10(max|ref|^2 / MSE). Identical inputs give +inf.
auto psnr(CxArray const &test, CxArray const &ref) -> double;

struct SsimOptions
{
  Index window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 0.0; // <= 0 means max(ref)
};

// Mean SSIM over all window positions that lie fully inside [nx][ny] images.
auto ssim(RealArray const &test, RealArray const &ref, SsimOptions const &opts = {}) -> double;

auto magnitude(CxArray const &a) -> RealArray;
// Channel or frame k of an [nx][ny][K] array.
auto slice_last(CxArray const &a, Index k) -> CxArray;

// Mean over the last axis of per-slice magnitude SSIM, with one dynamic range
// taken from the whole reference stack.
auto stack_ssim(CxArray const &test, CxArray const &ref) -> double;

// Frames t of [nx][ny][T] kept in the given order.
auto select_frames(CxArray const &x, std::vector<Index> const &frames) -> CxArray;

// 8-bit grayscale PNG of |test| - |ref| magnitudes (absolute), windowed to
// [0, 0.5 max|ref|]; frames are tiled left to right.
void write_error_map_png(std::filesystem::path const &path, CxArray const &test, CxArray const &ref);
void write_png_gray8(std::filesystem::path const &path, Index width, Index height, std::vector<std::uint8_t> const &pixels);

struct MetricsRow
{
  std::string method;
  std::string target; // "factor" or "frames"
  std::string seed;   // a seed, "mean" or "std"
  double nrmse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double wall_time_s = 0.0;
  std::size_t peak_alloc_bytes = 0;
};

struct MetricsReport
{
  std::vector<MetricsRow> rows;

  // Appends mean and population standard deviation rows per (method, target).
  void summarize();
  auto csv() const -> std::string;
  // Method x metric table, mean with the standard deviation in brackets.
  auto table() const -> std::string;
};

inline constexpr char const *kCsvHeader = "method,target,seed,nrmse,psnr_db,ssim,wall_time_s,peak_alloc_bytes";

} // namespace ncsub
