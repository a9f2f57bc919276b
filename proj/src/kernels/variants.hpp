#pragma once

#include "iovsim/kernels/kernels.hpp"

namespace iovsim::kernels::detail {

const Table* avx2_table();  // defined only when the AVX2 translation unit is built
const Table* neon_table();

}  // namespace iovsim::kernels::detail
