#include <cstdlib>
#include <stdexcept>
#include <string>

#include "variants.hpp"

namespace iovsim::kernels {

const Table* avx2() {
#if defined(IOVSIM_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Table* neon() {
#if defined(IOVSIM_HAVE_NEON)
  return detail::neon_table();
#else
  return nullptr;
#endif
}

namespace {

const Table& select() {
  const char* env = std::getenv("IOVSIM_SIMD");
  const std::string forced = env ? env : "";
  if (forced == "scalar") return scalar();
  if (forced == "avx2" && avx2()) return *avx2();
  if (forced == "neon" && neon()) return *neon();
  if (const Table* t = avx2()) return *t;
  if (const Table* t = neon()) return *t;
  return scalar();
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("kernels: ") + what);
}

}  // namespace

const Table& active() {
  static const Table& table = select();
  return table;
}

void dense_accumulate(std::span<const double> w, std::span<const double> x, std::span<double> y) {
  require(w.size() == x.size() * y.size(), "dense_accumulate weight shape mismatch");
  active().dense_accumulate(w.data(), x.data(), x.size(), y.size(), y.data());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy length mismatch");
  active().axpy(a, x.data(), y.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void distances(std::span<const double> xs, std::span<const double> ys, double px, double py, std::span<double> out) {
  require(xs.size() == ys.size() && xs.size() == out.size(), "distances length mismatch");
  active().distances(xs.data(), ys.data(), xs.size(), px, py, out.data());
}

double min_columns_sum(std::span<const double* const> cols, std::size_t n) {
  require(!cols.empty(), "min_columns_sum needs at least one column");
  return active().min_columns_sum(cols.data(), cols.size(), n);
}

}  // namespace iovsim::kernels
