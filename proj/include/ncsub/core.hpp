#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncsub {

using Index = std::ptrdiff_t;
using Cx = std::complex<double>;
using Shape = std::vector<Index>;

inline constexpr double kPi = std::numbers::pi;

// Error hierarchy. The CLI maps these onto exit codes:
// UsageError -> 1, DataError -> 2, NumericalError -> 3.
struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct UsageError : Error
{
  using Error::Error;
};

struct DataError : Error
{
  using Error::Error;
};

struct NumericalError : Error
{
  using Error::Error;
};

auto product(Shape const &shape) -> Index;
auto shape_string(Shape const &shape) -> std::string;

namespace memtrack {
// Hooks called by Array on every buffer allocation/release.
void allocated(Shape const &shape, std::size_t bytes);
void released(std::size_t bytes);
} // namespace memtrack

/*
 * Dense row-major array (last index fastest). Every buffer reports its shape and
 * byte size to the allocation tracker, which is how the test harness checks
 * which axes the solvers actually materialise.
 */
template <typename T>
class Array
{
public:
  using value_type = T;

  Array() = default;

  explicit Array(Shape shape, T fill = T{})
    : shape_(std::move(shape))
  {
    for (auto d : shape_) {
      if (d < 0) { throw DataError("negative dimension in " + shape_string(shape_)); }
    }
    data_.assign(static_cast<std::size_t>(product(shape_)), fill);
    track();
  }

  Array(Array const &other)
    : shape_(other.shape_)
    , data_(other.data_)
  {
    track();
  }

  Array(Array &&other) noexcept
    : shape_(std::move(other.shape_))
    , data_(std::move(other.data_))
    , bytes_(std::exchange(other.bytes_, 0))
  {
    other.shape_.clear();
  }

  auto operator=(Array const &other) -> Array &
  {
    if (this != &other) {
      release();
      shape_ = other.shape_;
      data_ = other.data_;
      track();
    }
    return *this;
  }

  auto operator=(Array &&other) noexcept -> Array &
  {
    if (this != &other) {
      release();
      shape_ = std::move(other.shape_);
      data_ = std::move(other.data_);
      bytes_ = std::exchange(other.bytes_, 0);
      other.shape_.clear();
      other.data_.clear();
    }
    return *this;
  }

  ~Array() { release(); }

  auto shape() const -> Shape const & { return shape_; }
  auto rank() const -> Index { return static_cast<Index>(shape_.size()); }
  auto dim(Index i) const -> Index { return shape_.at(static_cast<std::size_t>(i)); }
  auto size() const -> Index { return static_cast<Index>(data_.size()); }
  auto empty() const -> bool { return data_.empty(); }

  auto data() -> T * { return data_.data(); }
  auto data() const -> T const * { return data_.data(); }
  auto span() -> std::span<T> { return data_; }
  auto span() const -> std::span<T const> { return data_; }

  auto operator[](Index i) -> T & { return data_[static_cast<std::size_t>(i)]; }
  auto operator[](Index i) const -> T const & { return data_[static_cast<std::size_t>(i)]; }

  template <typename... I>
  auto operator()(I... idx) -> T &
  {
    return data_[offset(idx...)];
  }
  template <typename... I>
  auto operator()(I... idx) const -> T const &
  {
    return data_[offset(idx...)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  // Same element count, new dimensions.
  auto reshaped(Shape shape) && -> Array
  {
    if (product(shape) != size()) { throw DataError("reshape size mismatch"); }
    Array out(std::move(*this));
    out.shape_ = std::move(shape);
    return out;
  }

private:
  template <typename... I>
  auto offset(I... idx) const -> std::size_t
  {
    Index const ids[] = {static_cast<Index>(idx)...};
    Index off = 0;
    for (std::size_t d = 0; d < sizeof...(I); d++) {
      off = off * shape_[d] + ids[d];
    }
    return static_cast<std::size_t>(off);
  }

  void track()
  {
    bytes_ = data_.size() * sizeof(T);
    memtrack::allocated(shape_, bytes_);
  }

  void release()
  {
    if (bytes_) { memtrack::released(bytes_); }
    bytes_ = 0;
  }

  Shape shape_;
  std::vector<T> data_;
  std::size_t bytes_ = 0;
};

using CxArray = Array<Cx>;
using RealArray = Array<double>;

} // namespace ncsub
