#pragma once

// Data-parallel inner loops of the simulator. Every kernel has a scalar reference implementation
// and vector variants (AVX2 on x86-64, NEON on aarch64) selected once at runtime. All variants
// produce bit-identical results: reductions use a fixed 4-lane blocked summation order, and no
// variant contracts multiply-add pairs into FMA.
//
// Set IOVSIM_SIMD=scalar to force the reference kernels.

#include <cstddef>
#include <span>
#include <string_view>

namespace iovsim::kernels {

struct Table {
  std::string_view name;

  /// y[j] += sum_i x[i] * w[i*out + j], accumulated in increasing i.
  void (*dense_accumulate)(const double* w, const double* x, std::size_t in, std::size_t out, double* y);

  /// y[k] += a * x[k]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  /// Blocked dot product: four lane accumulators over k = 4m + l, combined as
  /// (l0 + l1) + (l2 + l3), then the n % 4 tail added in order.
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// out[k] = |(xs[k], ys[k]) - (px, py)|
  void (*distances)(const double* xs, const double* ys, std::size_t n, double px, double py, double* out);

  /// sum_k min_c cols[c][k], with the same blocked summation order as `dot`. ncols >= 1.
  double (*min_columns_sum)(const double* const* cols, std::size_t ncols, std::size_t n);
};

const Table& scalar();

/// nullptr when the variant is not compiled in or the CPU lacks the instruction set.
const Table* avx2();
const Table* neon();

/// The dispatched table (best available unless overridden by IOVSIM_SIMD).
const Table& active();

// Span front-ends over the active table.
void dense_accumulate(std::span<const double> w, std::span<const double> x, std::span<double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void distances(std::span<const double> xs, std::span<const double> ys, double px, double py, std::span<double> out);
double min_columns_sum(std::span<const double* const> cols, std::size_t n);

}  // namespace iovsim::kernels
