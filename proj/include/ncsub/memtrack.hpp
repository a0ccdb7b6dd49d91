#pragma once

#include "core.hpp"

#include <cstddef>
#include <vector>

namespace ncsub::memtrack {

// Bytes currently held by live Arrays, process-wide.
auto live_bytes() -> std::size_t;

/*
 * Records every Array allocation made while it is alive, together with the
 * peak number of live bytes above the level at construction. Only one
 * recorder may be active at a time.
 */
class Recorder
{
public:
  Recorder();
  ~Recorder();
  Recorder(Recorder const &) = delete;
  auto operator=(Recorder const &) -> Recorder & = delete;

  auto shapes() const -> std::vector<Shape>;
  auto peak_bytes() const -> std::size_t;
  // True if any recorded allocation has an axis of length n.
  auto saw_axis(Index n) const -> bool;
  auto count() const -> std::size_t;
};

} // namespace ncsub::memtrack
