#include "ncsub/core.hpp"
#include "ncsub/memtrack.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>

namespace ncsub {

auto product(Shape const &shape) -> Index
{
  Index p = 1;
  for (auto d : shape) {
    p *= d;
  }
  return p;
}

auto shape_string(Shape const &shape) -> std::string
{
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); i++) {
    if (i) { s += ", "; }
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace memtrack {
namespace {
std::atomic<std::size_t> live{0};
std::atomic<bool> recording{false};
std::mutex mutex;
std::vector<Shape> recorded;
std::size_t baseline = 0;
std::size_t peak = 0;
} // namespace

void allocated(Shape const &shape, std::size_t bytes)
{
  auto const now = live.fetch_add(bytes) + bytes;
  if (recording.load(std::memory_order_relaxed)) {
    std::lock_guard lock(mutex);
    recorded.push_back(shape);
    peak = std::max(peak, now > baseline ? now - baseline : 0);
  }
}

void released(std::size_t bytes) { live.fetch_sub(bytes); }

auto live_bytes() -> std::size_t { return live.load(); }

Recorder::Recorder()
{
  std::lock_guard lock(mutex);
  if (recording.load()) { throw Error("memtrack: a recorder is already active"); }
  recorded.clear();
  baseline = live.load();
  peak = 0;
  recording.store(true);
}

Recorder::~Recorder() { recording.store(false); }

auto Recorder::shapes() const -> std::vector<Shape>
{
  std::lock_guard lock(mutex);
  return recorded;
}

auto Recorder::peak_bytes() const -> std::size_t
{
  std::lock_guard lock(mutex);
  return peak;
}

auto Recorder::saw_axis(Index n) const -> bool
{
  std::lock_guard lock(mutex);
  return std::any_of(recorded.begin(), recorded.end(), [n](Shape const &s) {
    return std::find(s.begin(), s.end(), n) != s.end();
  });
}

auto Recorder::count() const -> std::size_t
{
  std::lock_guard lock(mutex);
  return recorded.size();
}

} // namespace memtrack
} // namespace ncsub
