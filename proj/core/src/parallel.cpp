#include "branchwave/parallel.hpp"

#include <algorithm>

#ifdef BRANCHWAVE_HAVE_OPENMP
#include <omp.h>
#endif

namespace branchwave {

namespace {
int g_threads = 1;

std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

template <class T, class F>
T block_reduce(std::size_t n, F&& partial) {
  const std::size_t nb = block_count(n);
  std::vector<T> part(nb, T{});
  const long long nbl = static_cast<long long>(nb);
#pragma omp parallel for schedule(static) num_threads(g_threads) if (nb > 8)
  for (long long b = 0; b < nbl; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    part[static_cast<std::size_t>(b)] = partial(lo, hi);
  }
  T acc{};
  for (const T& p : part) acc += p;
  return acc;
}
}  // namespace

void set_threads(int n) {
  g_threads = std::max(1, n);
#ifdef BRANCHWAVE_HAVE_OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int threads() { return g_threads; }

cplx dot(const cvec& a, const cvec& b) {
  return block_reduce<cplx>(a.size(), [&](std::size_t lo, std::size_t hi) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
      im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return cplx(re, im);
  });
}

double norm_sq(const cvec& a) {
  return block_reduce<double>(a.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::norm(a[i]);
    return s;
  });
}

double norm_sq_weighted(const cvec& a, const std::vector<double>& w) {
  return block_reduce<double>(a.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += w[i] * std::norm(a[i]);
    return s;
  });
}

void axpy(cplx alpha, const cvec& x, cvec& y) {
  const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static) num_threads(g_threads) if (n > 65536)
  for (long long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const cvec& x, cplx beta, cvec& y) {
  const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static) num_threads(g_threads) if (n > 65536)
  for (long long i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale(cplx alpha, cvec& x) {
  const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static) num_threads(g_threads) if (n > 65536)
  for (long long i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace branchwave
