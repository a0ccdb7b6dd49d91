#pragma once

#include "core.hpp"

#include <cmath>

// Flat vector arithmetic on arrays of equal size. Sums run serially in index
// order, so results do not depend on the thread count.
namespace ncsub::la {

inline void check_same(CxArray const &a, CxArray const &b)
{
  if (a.size() != b.size()) {
    throw DataError("size mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

// sum conj(a) b
inline auto dot(CxArray const &a, CxArray const &b) -> Cx
{
  check_same(a, b);
  Cx s{};
  for (Index i = 0; i < a.size(); i++) {
    s += std::conj(a[i]) * b[i];
  }
  return s;
}

inline auto norm2(CxArray const &a) -> double
{
  double s = 0.0;
  for (auto const &v : a.span()) {
    s += std::norm(v);
  }
  return s;
}

inline auto norm(CxArray const &a) -> double { return std::sqrt(norm2(a)); }

inline auto dist(CxArray const &a, CxArray const &b) -> double
{
  check_same(a, b);
  double s = 0.0;
  for (Index i = 0; i < a.size(); i++) {
    s += std::norm(a[i] - b[i]);
  }
  return std::sqrt(s);
}

inline auto rel_error(CxArray const &test, CxArray const &ref) -> double
{
  double const r = norm(ref);
  return r > 0.0 ? dist(test, ref) / r : norm(test);
}

// y += a x
inline void axpy(Cx a, CxArray const &x, CxArray &y)
{
  check_same(x, y);
  for (Index i = 0; i < x.size(); i++) {
    y[i] += a * x[i];
  }
}

inline void scale(Cx a, CxArray &x)
{
  for (auto &v : x.span()) {
    v *= a;
  }
}

} // namespace ncsub::la
