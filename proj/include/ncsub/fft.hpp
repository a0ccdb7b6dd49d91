#pragma once

#include "core.hpp"

namespace ncsub::fft {

/*
 * In-place unnormalised 2-D DFT of an [nx][ny][channels] block, transforming
 * every channel. Forward uses exp(-i...), inverse exp(+i...) without the 1/N.
 * Plans are cached per geometry and safe to execute from several threads.
 */
void forward(Cx *data, Index nx, Index ny, Index channels = 1);
void inverse(Cx *data, Index nx, Index ny, Index channels = 1);

// Convenience on arrays whose first two dims are spatial.
void forward(CxArray &a);
void inverse(CxArray &a);

} // namespace ncsub::fft
