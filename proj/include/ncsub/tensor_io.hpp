#pragma once

#include "core.hpp"

#include <cstdint>
#include <filesystem>
#include <variant>

namespace ncsub {

/*
 * NCS1 tensor container.
 *
 *   offset 0   magic "NCS1"
 *          4   version (1)
 *          5   dtype code (1 complex-single, 2 real-single, 3 real-double, 4 complex-double)
 *          6   ndim (1..8)
 *          7   reserved, zero
 *          8   ndim x uint64 little-endian dims
 *              payload, row-major, little-endian, complex as interleaved (re, im)
 */
enum class DType : std::uint8_t
{
  ComplexSingle = 1,
  RealSingle = 2,
  RealDouble = 3,
  ComplexDouble = 4,
};

inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr Index kMaxTensorRank = 8;

auto dtype_width(DType d) -> std::size_t;
auto dtype_name(DType d) -> char const *;

struct Tensor
{
  using Values =
    std::variant<Array<std::complex<float>>, Array<float>, Array<double>, Array<Cx>>;
  Values values;

  auto dtype() const -> DType;
  auto shape() const -> Shape const &;
};

void write_tensor(std::filesystem::path const &path, Tensor const &t);
auto read_tensor(std::filesystem::path const &path) -> Tensor;

// Convenience: store a double array under the requested dtype. Narrowing to
// single precision is explicit through the dtype argument.
void write_tensor(std::filesystem::path const &path, CxArray const &a, DType d = DType::ComplexDouble);
void write_tensor(std::filesystem::path const &path, RealArray const &a, DType d = DType::RealDouble);

// Widening views of a read tensor. Real -> complex is allowed; complex -> real is not.
auto to_complex(Tensor const &t) -> CxArray;
auto to_real(Tensor const &t) -> RealArray;

} // namespace ncsub
