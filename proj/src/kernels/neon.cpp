// aarch64 only; NEON is part of the base ISA there, so no runtime check is needed.

#include <arm_neon.h>

#include <cmath>

#include "variants.hpp"

namespace iovsim::kernels {
namespace {

void dense_accumulate_neon(const double* w, const double* x, std::size_t in, std::size_t out, double* y) {
  const std::size_t vec = out - out % 2;
  for (std::size_t i = 0; i < in; ++i) {
    const float64x2_t xi = vdupq_n_f64(x[i]);
    const double* row = w + i * out;
    for (std::size_t j = 0; j < vec; j += 2) {
      const float64x2_t prod = vmulq_f64(xi, vld1q_f64(row + j));
      vst1q_f64(y + j, vaddq_f64(vld1q_f64(y + j), prod));
    }
    for (std::size_t j = vec; j < out; ++j) y[j] = y[j] + x[i] * row[j];
  }
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const std::size_t vec = n - n % 2;
  for (std::size_t k = 0; k < vec; k += 2) {
    vst1q_f64(y + k, vaddq_f64(vld1q_f64(y + k), vmulq_f64(va, vld1q_f64(x + k))));
  }
  for (std::size_t k = vec; k < n; ++k) y[k] = y[k] + a * x[k];
}

// Lanes 0,1 live in lo and lanes 2,3 in hi, matching the 4-lane reference order.
double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t vec = n - n % 4;
  for (std::size_t k = 0; k < vec; k += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + k + 2), vld1q_f64(b + k + 2)));
  }
  double sum = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) + (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t k = vec; k < n; ++k) sum = sum + a[k] * b[k];
  return sum;
}

void distances_neon(const double* xs, const double* ys, std::size_t n, double px, double py, double* out) {
  const float64x2_t vx = vdupq_n_f64(px);
  const float64x2_t vy = vdupq_n_f64(py);
  const std::size_t vec = n - n % 2;
  for (std::size_t k = 0; k < vec; k += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + k), vx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + k), vy);
    vst1q_f64(out + k, vsqrtq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy))));
  }
  for (std::size_t k = vec; k < n; ++k) {
    const double dx = xs[k] - px;
    const double dy = ys[k] - py;
    out[k] = std::sqrt(dx * dx + dy * dy);
  }
}

// vminq_f64 differs from the reference selection only for NaN and signed zeros, which never
// occur in delay columns; use compare+select to keep the rule identical anyway.
float64x2_t select_min(float64x2_t m, float64x2_t v) { return vbslq_f64(vcltq_f64(m, v), m, v); }

double min_columns_sum_neon(const double* const* cols, std::size_t ncols, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t vec = n - n % 4;
  for (std::size_t k = 0; k < vec; k += 4) {
    float64x2_t mlo = vld1q_f64(cols[0] + k);
    float64x2_t mhi = vld1q_f64(cols[0] + k + 2);
    for (std::size_t c = 1; c < ncols; ++c) {
      mlo = select_min(mlo, vld1q_f64(cols[c] + k));
      mhi = select_min(mhi, vld1q_f64(cols[c] + k + 2));
    }
    lo = vaddq_f64(lo, mlo);
    hi = vaddq_f64(hi, mhi);
  }
  double sum = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) + (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t k = vec; k < n; ++k) {
    double m = cols[0][k];
    for (std::size_t c = 1; c < ncols; ++c) m = m < cols[c][k] ? m : cols[c][k];
    sum = sum + m;
  }
  return sum;
}

}  // namespace

namespace detail {

const Table* neon_table() {
  static const Table table{"neon", dense_accumulate_neon, axpy_neon, dot_neon, distances_neon, min_columns_sum_neon};
  return &table;
}

}  // namespace detail
}  // namespace iovsim::kernels
