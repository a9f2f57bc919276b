#include <cmath>

#include "iovsim/kernels/kernels.hpp"

namespace iovsim::kernels {
namespace {

void dense_accumulate_ref(const double* w, const double* x, std::size_t in, std::size_t out, double* y) {
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    const double* row = w + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] = y[j] + xi * row[j];
  }
}

void axpy_ref(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] = y[k] + a * x[k];
}

double dot_ref(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t blocked = n - n % 4;
  for (std::size_t k = 0; k < blocked; k += 4) {
    for (std::size_t l = 0; l < 4; ++l) lane[l] = lane[l] + a[k + l] * b[k + l];
  }
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t k = blocked; k < n; ++k) sum = sum + a[k] * b[k];
  return sum;
}

void distances_ref(const double* xs, const double* ys, std::size_t n, double px, double py, double* out) {
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = xs[k] - px;
    const double dy = ys[k] - py;
    out[k] = std::sqrt(dx * dx + dy * dy);
  }
}

double column_min(const double* const* cols, std::size_t ncols, std::size_t k) {
  double m = cols[0][k];
  // Same selection rule as minpd: (m < v) ? m : v.
  for (std::size_t c = 1; c < ncols; ++c) m = m < cols[c][k] ? m : cols[c][k];
  return m;
}

double min_columns_sum_ref(const double* const* cols, std::size_t ncols, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t blocked = n - n % 4;
  for (std::size_t k = 0; k < blocked; k += 4) {
    for (std::size_t l = 0; l < 4; ++l) lane[l] = lane[l] + column_min(cols, ncols, k + l);
  }
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t k = blocked; k < n; ++k) sum = sum + column_min(cols, ncols, k);
  return sum;
}

}  // namespace

const Table& scalar() {
  static const Table table{"scalar", dense_accumulate_ref, axpy_ref, dot_ref, distances_ref, min_columns_sum_ref};
  return table;
}

}  // namespace iovsim::kernels
