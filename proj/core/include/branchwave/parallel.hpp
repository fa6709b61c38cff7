#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace branchwave {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

// Thread count used by data-parallel kernels. Reductions are accumulated in
// fixed-size blocks and combined in block order, so results do not depend on
// the thread count.
void set_threads(int n);
int threads();

inline constexpr std::size_t kReductionBlock = 4096;

// <a, b> = sum conj(a_i) b_i
cplx dot(const cvec& a, const cvec& b);
double norm_sq(const cvec& a);
double norm_sq_weighted(const cvec& a, const std::vector<double>& w);
// y += alpha x
void axpy(cplx alpha, const cvec& x, cvec& y);
// y = x + beta y
void xpby(const cvec& x, cplx beta, cvec& y);
void scale(cplx alpha, cvec& x);

}  // namespace branchwave
