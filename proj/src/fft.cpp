#include "ncsub/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace ncsub::fft {

namespace {

struct PlanCache
{
  using Key = std::tuple<Index, Index, Index, int>;

  std::mutex mutex;
  std::map<Key, fftw_plan> plans;

  ~PlanCache()
  {
    for (auto &[k, p] : plans) {
      fftw_destroy_plan(p);
    }
  }

  auto get(Index nx, Index ny, Index channels, int sign) -> fftw_plan
  {
    std::lock_guard lock(mutex);
    auto const key = Key{nx, ny, channels, sign};
    if (auto it = plans.find(key); it != plans.end()) { return it->second; }
    int const n[2] = {static_cast<int>(nx), static_cast<int>(ny)};
    int const c = static_cast<int>(channels);
    auto *scratch = fftw_alloc_complex(static_cast<std::size_t>(nx * ny * channels));
    // Channels are interleaved: stride = channels, distance between transforms = 1.
    auto plan = fftw_plan_many_dft(2, n, c, scratch, nullptr, c, 1, scratch, nullptr, c, 1, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (!plan) { throw NumericalError("FFTW failed to create a plan"); }
    plans.emplace(key, plan);
    return plan;
  }
};

auto cache() -> PlanCache &
{
  static PlanCache c;
  return c;
}

void run(Cx *data, Index nx, Index ny, Index channels, int sign)
{
  if (nx < 1 || ny < 1 || channels < 1) { return; }
  auto plan = cache().get(nx, ny, channels, sign);
  auto *p = reinterpret_cast<fftw_complex *>(data);
  fftw_execute_dft(plan, p, p);
}

void run(CxArray &a, int sign)
{
  if (a.rank() < 2) { throw DataError("fft needs at least two spatial dimensions"); }
  Index channels = 1;
  for (Index d = 2; d < a.rank(); d++) {
    channels *= a.dim(d);
  }
  run(a.data(), a.dim(0), a.dim(1), channels, sign);
}

} // namespace

void forward(Cx *data, Index nx, Index ny, Index channels) { run(data, nx, ny, channels, FFTW_FORWARD); }
void inverse(Cx *data, Index nx, Index ny, Index channels) { run(data, nx, ny, channels, FFTW_BACKWARD); }
void forward(CxArray &a) { run(a, FFTW_FORWARD); }
void inverse(CxArray &a) { run(a, FFTW_BACKWARD); }

} // namespace ncsub::fft
