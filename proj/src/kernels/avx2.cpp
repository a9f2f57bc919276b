// Compiled with -mavx2 (and without -mfma); only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "variants.hpp"

namespace iovsim::kernels {
namespace {

double hsum_blocked(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void dense_accumulate_avx2(const double* w, const double* x, std::size_t in, std::size_t out, double* y) {
  const std::size_t vec = out - out % 4;
  for (std::size_t i = 0; i < in; ++i) {
    const __m256d xi = _mm256_set1_pd(x[i]);
    const double* row = w + i * out;
    for (std::size_t j = 0; j < vec; j += 4) {
      const __m256d prod = _mm256_mul_pd(xi, _mm256_loadu_pd(row + j));
      _mm256_storeu_pd(y + j, _mm256_add_pd(_mm256_loadu_pd(y + j), prod));
    }
    for (std::size_t j = vec; j < out; ++j) y[j] = y[j] + x[i] * row[j];
  }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const std::size_t vec = n - n % 4;
  for (std::size_t k = 0; k < vec; k += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), prod));
  }
  for (std::size_t k = vec; k < n; ++k) y[k] = y[k] + a * x[k];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t vec = n - n % 4;
  for (std::size_t k = 0; k < vec; k += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  }
  double sum = hsum_blocked(acc);
  for (std::size_t k = vec; k < n; ++k) sum = sum + a[k] * b[k];
  return sum;
}

void distances_avx2(const double* xs, const double* ys, std::size_t n, double px, double py, double* out) {
  const __m256d vx = _mm256_set1_pd(px);
  const __m256d vy = _mm256_set1_pd(py);
  const std::size_t vec = n - n % 4;
  for (std::size_t k = 0; k < vec; k += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + k), vx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + k), vy);
    const __m256d sq = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    _mm256_storeu_pd(out + k, _mm256_sqrt_pd(sq));
  }
  for (std::size_t k = vec; k < n; ++k) {
    const double dx = xs[k] - px;
    const double dy = ys[k] - py;
    out[k] = std::sqrt(dx * dx + dy * dy);
  }
}

double min_columns_sum_avx2(const double* const* cols, std::size_t ncols, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t vec = n - n % 4;
  for (std::size_t k = 0; k < vec; k += 4) {
    __m256d m = _mm256_loadu_pd(cols[0] + k);
    for (std::size_t c = 1; c < ncols; ++c) m = _mm256_min_pd(m, _mm256_loadu_pd(cols[c] + k));
    acc = _mm256_add_pd(acc, m);
  }
  double sum = hsum_blocked(acc);
  for (std::size_t k = vec; k < n; ++k) {
    double m = cols[0][k];
    for (std::size_t c = 1; c < ncols; ++c) m = m < cols[c][k] ? m : cols[c][k];
    sum = sum + m;
  }
  return sum;
}

}  // namespace

namespace detail {

const Table* avx2_table() {
  static const Table table{"avx2", dense_accumulate_avx2, axpy_avx2, dot_avx2, distances_avx2, min_columns_sum_avx2};
  return &table;
}

}  // namespace detail
}  // namespace iovsim::kernels
