#include "ncsub/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace ncsub {

namespace {

constexpr std::array<char, 4> kMagic = {'N', 'C', 'S', '1'};
constexpr std::size_t kFixedHeader = 8;

template <typename U>
void put_le(std::vector<unsigned char> &out, U v)
{
  for (std::size_t i = 0; i < sizeof(U); i++) {
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
}

template <typename U>
auto get_le(unsigned char const *p) -> U
{
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); i++) {
    v |= static_cast<U>(p[i]) << (8 * i);
  }
  return v;
}

void put_scalar(std::vector<unsigned char> &out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void put_scalar(std::vector<unsigned char> &out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename S>
auto get_scalar(unsigned char const *p) -> S
{
  if constexpr (std::is_same_v<S, float>) {
    return std::bit_cast<float>(get_le<std::uint32_t>(p));
  } else {
    return std::bit_cast<double>(get_le<std::uint64_t>(p));
  }
}

template <typename T>
struct Traits;
template <>
struct Traits<std::complex<float>>
{
  static constexpr DType code = DType::ComplexSingle;
};
template <>
struct Traits<float>
{
  static constexpr DType code = DType::RealSingle;
};
template <>
struct Traits<double>
{
  static constexpr DType code = DType::RealDouble;
};
template <>
struct Traits<Cx>
{
  static constexpr DType code = DType::ComplexDouble;
};

template <typename T>
void append_payload(std::vector<unsigned char> &out, Array<T> const &a)
{
  for (auto const &v : a.span()) {
    if constexpr (std::is_floating_point_v<T>) {
      put_scalar(out, v);
    } else {
      put_scalar(out, v.real());
      put_scalar(out, v.imag());
    }
  }
}

template <typename T>
auto decode_payload(Shape shape, unsigned char const *p) -> Array<T>
{
  Array<T> a(std::move(shape));
  for (Index i = 0; i < a.size(); i++) {
    if constexpr (std::is_floating_point_v<T>) {
      a[i] = get_scalar<T>(p);
      p += sizeof(T);
    } else {
      using S = typename T::value_type;
      auto const re = get_scalar<S>(p);
      auto const im = get_scalar<S>(p + sizeof(S));
      a[i] = T(re, im);
      p += 2 * sizeof(S);
    }
  }
  return a;
}

} // namespace

auto dtype_width(DType d) -> std::size_t
{
  switch (d) {
  case DType::ComplexSingle: return 8;
  case DType::RealSingle: return 4;
  case DType::RealDouble: return 8;
  case DType::ComplexDouble: return 16;
  }
  throw DataError("unsupported dtype code " + std::to_string(static_cast<int>(d)));
}

auto dtype_name(DType d) -> char const *
{
  switch (d) {
  case DType::ComplexSingle: return "complex-single";
  case DType::RealSingle: return "real-single";
  case DType::RealDouble: return "real-double";
  case DType::ComplexDouble: return "complex-double";
  }
  return "unknown";
}

auto Tensor::dtype() const -> DType
{
  return std::visit([](auto const &a) { return Traits<typename std::decay_t<decltype(a)>::value_type>::code; }, values);
}

auto Tensor::shape() const -> Shape const &
{
  return std::visit([](auto const &a) -> Shape const & { return a.shape(); }, values);
}

void write_tensor(std::filesystem::path const &path, Tensor const &t)
{
  auto const &shape = t.shape();
  if (shape.empty() || static_cast<Index>(shape.size()) > kMaxTensorRank) {
    throw DataError("tensor rank must be in 1..8, got " + std::to_string(shape.size()));
  }
  for (auto d : shape) {
    if (d < 1) { throw DataError("tensor dims must be >= 1, got " + shape_string(shape)); }
  }

  std::vector<unsigned char> bytes;
  bytes.reserve(kFixedHeader + 8 * shape.size() + product(shape) * dtype_width(t.dtype()));
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  bytes.push_back(kTensorVersion);
  bytes.push_back(static_cast<unsigned char>(t.dtype()));
  bytes.push_back(static_cast<unsigned char>(shape.size()));
  bytes.push_back(0);
  for (auto d : shape) {
    put_le(bytes, static_cast<std::uint64_t>(d));
  }
  std::visit([&](auto const &a) { append_payload(bytes, a); }, t.values);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) { throw DataError("cannot open " + path.string() + " for writing"); }
  f.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) { throw DataError("write failed for " + path.string()); }
}

auto read_tensor(std::filesystem::path const &path) -> Tensor
{
  std::ifstream f(path, std::ios::binary);
  if (!f) { throw DataError("cannot open " + path.string()); }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < kFixedHeader) { throw DataError(path.string() + ": truncated header"); }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw DataError(path.string() + ": bad magic");
  }
  if (bytes[4] != kTensorVersion) {
    throw DataError(path.string() + ": unsupported version " + std::to_string(bytes[4]));
  }
  auto const code = static_cast<DType>(bytes[5]);
  if (bytes[5] < 1 || bytes[5] > 4) { throw DataError(path.string() + ": unsupported dtype code"); }
  auto const ndim = static_cast<std::size_t>(bytes[6]);
  if (ndim < 1 || ndim > static_cast<std::size_t>(kMaxTensorRank)) {
    throw DataError(path.string() + ": bad rank " + std::to_string(ndim));
  }
  if (bytes.size() < kFixedHeader + 8 * ndim) { throw DataError(path.string() + ": truncated dims"); }

  Shape shape(ndim);
  std::uint64_t count = 1;
  auto const width = dtype_width(code);
  constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<Index>::max());
  for (std::size_t i = 0; i < ndim; i++) {
    auto const d = get_le<std::uint64_t>(bytes.data() + kFixedHeader + 8 * i);
    if (d == 0) { throw DataError(path.string() + ": zero dimension"); }
    if (d > kMax / width || count > kMax / width / d) { throw DataError(path.string() + ": dims overflow"); }
    count *= d;
    shape[i] = static_cast<Index>(d);
  }
  auto const payload = count * width;
  auto const header = kFixedHeader + 8 * ndim;
  if (bytes.size() - header < payload) {
    throw DataError(path.string() + ": truncated payload, expected " + std::to_string(payload) + " bytes, found " +
                    std::to_string(bytes.size() - header));
  }
  if (bytes.size() - header > payload) { throw DataError(path.string() + ": trailing bytes after payload"); }

  auto const *p = bytes.data() + header;
  switch (code) {
  case DType::ComplexSingle: return Tensor{decode_payload<std::complex<float>>(shape, p)};
  case DType::RealSingle: return Tensor{decode_payload<float>(shape, p)};
  case DType::RealDouble: return Tensor{decode_payload<double>(shape, p)};
  case DType::ComplexDouble: return Tensor{decode_payload<Cx>(shape, p)};
  }
  throw DataError("unreachable dtype");
}

void write_tensor(std::filesystem::path const &path, CxArray const &a, DType d)
{
  switch (d) {
  case DType::ComplexDouble: write_tensor(path, Tensor{a}); return;
  case DType::ComplexSingle: {
    Array<std::complex<float>> n(a.shape());
    for (Index i = 0; i < a.size(); i++) {
      n[i] = std::complex<float>(a[i]);
    }
    write_tensor(path, Tensor{std::move(n)});
    return;
  }
  default: throw DataError(std::string("cannot store complex data as ") + dtype_name(d));
  }
}

void write_tensor(std::filesystem::path const &path, RealArray const &a, DType d)
{
  switch (d) {
  case DType::RealDouble: write_tensor(path, Tensor{a}); return;
  case DType::RealSingle: {
    Array<float> n(a.shape());
    for (Index i = 0; i < a.size(); i++) {
      n[i] = static_cast<float>(a[i]);
    }
    write_tensor(path, Tensor{std::move(n)});
    return;
  }
  default: {
    CxArray c(a.shape());
    for (Index i = 0; i < a.size(); i++) {
      c[i] = a[i];
    }
    write_tensor(path, c, d);
  }
  }
}

auto to_complex(Tensor const &t) -> CxArray
{
  return std::visit(
    [](auto const &a) {
      CxArray out(a.shape());
      for (Index i = 0; i < a.size(); i++) {
        out[i] = Cx(a[i]);
      }
      return out;
    },
    t.values);
}

auto to_real(Tensor const &t) -> RealArray
{
  return std::visit(
    [](auto const &a) -> RealArray {
      using T = typename std::decay_t<decltype(a)>::value_type;
      if constexpr (std::is_floating_point_v<T>) {
        RealArray out(a.shape());
        for (Index i = 0; i < a.size(); i++) {
          out[i] = a[i];
        }
        return out;
      } else {
        throw DataError("expected a real tensor, found complex");
      }
    },
    t.values);
}

} // namespace ncsub
