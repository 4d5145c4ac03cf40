#pragma once

// Data-parallel pair sums with a fixed reduction tree.
//
// The parallel routines split work by row only; each row is accumulated by
// one thread in index order and rows are combined by a serial pairwise tree,
// so results are bit-identical for every thread count. The `serial`
// namespace holds naive reference loops used by the tests and benchmarks.

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kdisc {

/// Sets the OpenMP team size used by the parallel kernels (no-op without OpenMP).
inline void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Pairwise (cascade) summation. Error grows like O(eps log n) instead of O(eps n).
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 32;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

namespace parallel {

/// Holds the first exception raised inside a parallel region; an exception
/// escaping an OpenMP region would terminate the process.
class ExceptionSlot {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!ptr_) ptr_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr ptr_;
};

/// for i in [0, n): body(i), parallel, exceptions forwarded to the caller.
template <class F>
void for_each(std::size_t n, F&& body) {
  ExceptionSlot slot;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) slot.run([&] { body(static_cast<std::size_t>(i)); });
  slot.rethrow();
}

/// out[i] = f(i) for i in [0, n).
template <class F>
void map(std::size_t n, F&& f, std::span<double> out) {
  for_each(n, [&](std::size_t i) { out[i] = f(i); });
}

/// Sum of f(i) over [0, n) with a thread-count independent reduction order.
template <class F>
double sum(std::size_t n, F&& f) {
  std::vector<double> terms(n);
  map(n, f, terms);
  return pairwise_sum(terms);
}

/// row[i] = sum_j f(i, j) for j in [0, n_cols), each row pairwise-summed.
template <class F>
void row_sums(std::size_t n_rows, std::size_t n_cols, F&& f, std::span<double> row) {
  const auto rows = static_cast<std::ptrdiff_t>(n_rows);
  ExceptionSlot slot;
#pragma omp parallel
  {
    std::vector<double> buf(n_cols);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      slot.run([&] {
        const auto ii = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j < n_cols; ++j) buf[j] = f(ii, j);
        row[ii] = pairwise_sum(buf);
      });
    }
  }
  slot.rethrow();
}

/// Double sum over [0, n_rows) x [0, n_cols).
template <class F>
double pair_sum(std::size_t n_rows, std::size_t n_cols, F&& f) {
  std::vector<double> row(n_rows);
  row_sums(n_rows, n_cols, f, row);
  return pairwise_sum(row);
}

/// Fills a symmetric n x n row-major matrix from its upper triangle.
template <class F>
void symmetric_fill(std::size_t n, F&& f, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    slot.run([&] {
      const auto ii = static_cast<std::size_t>(i);
      for (std::size_t j = ii; j < n; ++j) out[ii * n + j] = f(ii, j);
    });
  }
  slot.rethrow();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) out[i * n + j] = out[j * n + i];
}

}  // namespace parallel

namespace serial {

template <class F>
double sum(std::size_t n, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s;
}

template <class F>
double pair_sum(std::size_t n_rows, std::size_t n_cols, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_cols; ++j) s += f(i, j);
  return s;
}

template <class F>
void symmetric_fill(std::size_t n, F&& f, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = f(i, j);
}

}  // namespace serial

}  // namespace kdisc
