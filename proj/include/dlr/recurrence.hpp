#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "dlr/kernels.hpp"

namespace dlr {

// Dense single-input single-output linear RNN x_k = A x_{k-1} + B u_k,
// y_k = C x_k. Row-major storage.
struct LinearRnnSystem {
  std::vector<cplx> A;  // [N*N]
  std::vector<cplx> B;  // [N]
  std::vector<cplx> C;  // [N]
  int N = 0;
};

// Result of solving w P = one-hot-at-last-position over a real Vandermonde
// basis (lambda_i, lambda_i^2, ..., lambda_i^N).
struct VandermondeStudy {
  std::vector<double> lambdas;
  int N = 0;
  double solution_norm = 0.0;  // ||w||_inf
  double residual = 0.0;       // ||w P - target||_inf of the reported solution
  std::vector<double> w;
};

struct WeightSolve {
  std::vector<cplx> w;
  double residual = 0.0;  // || sum_n w_n lambda_n^k - K_k ||_inf
};

// Sequential reference semantics: x_{n,k} = lambda_n x_{n,k-1} + u_k,
// y_k = sum_n w_n x_{n,k}, x_{-1} = 0.
std::vector<cplx> scan_dlr(const ComplexSpectrum& spectrum, const std::vector<cplx>& w,
                           const std::vector<double>& u);

// Dense recurrence, guarded to L <= 2^14.
std::vector<cplx> scan_linear_rnn(const LinearRnnSystem& sys, const std::vector<double>& u);

// Eigendecomposes A = V diag(Lambda) V^-1 and returns the diagonal system
// (Lambda, w) with w_n = (C V)_n (V^-1 B)_n computing the same map. Throws
// "not diagonalizable within tolerance" when cond(V) > 1e8.
std::pair<ComplexSpectrum, std::vector<cplx>> diagonalize_to_dlr(const LinearRnnSystem& sys);

// Solves K_k = sum_n w_n lambda_n^(k+first_exponent), k = 0..N-1. The default
// first_exponent = 0 is the kernel convention; pass 1 for the pure-power basis
// (lambda, lambda^2, ...). Uses the closed-form inverse w = conj(F) K / N on
// the DFT grid, a direct solve otherwise.
WeightSolve solve_kernel_weights(const ComplexSpectrum& spectrum,
                                 const std::vector<double>& target_kernel,
                                 int first_exponent = 0);

// Solves sum_i w_i lambda_i^j = [j == N] for j = 1..N with distinct real
// lambda_i in (0,1]. Exact rational arithmetic for N <= 20, double-precision
// least squares beyond. Throws "singular Vandermonde" on duplicates.
VandermondeStudy real_shift_solution(const std::vector<double>& lambdas);

// Spectral condition number of P_{n,k} = lambda_n^k for the size-N DFT grid
// (zero_re initialization), measured via the Hermitian eigenvalues of P* P.
double dft_grid_condition(int N);

}  // namespace dlr
