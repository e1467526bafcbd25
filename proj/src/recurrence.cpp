#include "dlr/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/multiprecision/cpp_int.hpp>

namespace dlr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr long kScanGuard = 1L << 14;

using EMatC = Eigen::MatrixXcd;
using EVecC = Eigen::VectorXcd;
using rational = boost::multiprecision::cpp_rational;

EMatC to_eigen(const std::vector<cplx>& a, int rows, int cols) {
  EMatC m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = a[static_cast<size_t>(i) * cols + j];
  return m;
}

}  // namespace

std::vector<cplx> scan_dlr(const ComplexSpectrum& spectrum, const std::vector<cplx>& w,
                           const std::vector<double>& u) {
  const int N = spectrum.size();
  if (static_cast<int>(w.size()) != N) throw std::invalid_argument("weight size mismatch");
  const long L = static_cast<long>(u.size());
  std::vector<cplx> state(N, cplx(0, 0));
  std::vector<cplx> y(u.size());
  for (long k = 0; k < L; ++k) {
    cplx acc(0, 0);
    for (int n = 0; n < N; ++n) {
      state[n] = spectrum.lambda[n] * state[n] + u[k];
      acc += w[n] * state[n];
    }
    y[k] = acc;
  }
  return y;
}

std::vector<cplx> scan_linear_rnn(const LinearRnnSystem& sys, const std::vector<double>& u) {
  const int N = sys.N;
  if (static_cast<int>(sys.A.size()) != N * N || static_cast<int>(sys.B.size()) != N ||
      static_cast<int>(sys.C.size()) != N)
    throw std::invalid_argument("system shape mismatch");
  if (static_cast<long>(u.size()) > kScanGuard) throw std::length_error("length guard exceeded");

  std::vector<cplx> x(N, cplx(0, 0)), xn(N);
  std::vector<cplx> y(u.size());
  for (size_t k = 0; k < u.size(); ++k) {
    for (int i = 0; i < N; ++i) {
      cplx acc(0, 0);
      const cplx* row = &sys.A[static_cast<size_t>(i) * N];
      for (int j = 0; j < N; ++j) acc += row[j] * x[j];
      xn[i] = acc + sys.B[i] * u[k];
    }
    x.swap(xn);
    cplx out(0, 0);
    for (int i = 0; i < N; ++i) out += sys.C[i] * x[i];
    y[k] = out;
  }
  return y;
}

std::pair<ComplexSpectrum, std::vector<cplx>> diagonalize_to_dlr(const LinearRnnSystem& sys) {
  const int N = sys.N;
  EMatC A = to_eigen(sys.A, N, N);
  Eigen::ComplexEigenSolver<EMatC> es(A, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("not diagonalizable within tolerance");
  const EMatC& V = es.eigenvectors();

  Eigen::JacobiSVD<EMatC> svd(V);
  const double smin = svd.singularValues()(N - 1);
  const double smax = svd.singularValues()(0);
  if (!(smin > 0.0) || smax / smin > 1e8)
    throw std::runtime_error("not diagonalizable within tolerance");

  EVecC b = to_eigen(sys.B, N, 1);
  EVecC c = to_eigen(sys.C, N, 1);
  EVecC cv = V.transpose() * c;                     // (C V)_n
  EVecC vib = V.partialPivLu().solve(b);            // (V^-1 B)_n

  ComplexSpectrum spec;
  spec.lambda.resize(N);
  std::vector<cplx> w(N);
  for (int n = 0; n < N; ++n) {
    spec.lambda[n] = es.eigenvalues()(n);
    w[n] = cv(n) * vib(n);
  }
  return {std::move(spec), std::move(w)};
}

WeightSolve solve_kernel_weights(const ComplexSpectrum& spectrum,
                                 const std::vector<double>& target_kernel,
                                 int first_exponent) {
  const int N = spectrum.size();
  if (static_cast<int>(target_kernel.size()) != N)
    throw std::invalid_argument("target kernel length must equal state size");

  bool dft_grid = first_exponent == 0;
  for (int n = 0; n < N && dft_grid; ++n) {
    const cplx expect = std::polar(1.0, kTwoPi * n / N);
    if (std::abs(spectrum.lambda[n] - expect) > 1e-12) dft_grid = false;
  }

  WeightSolve out;
  out.w.resize(N);
  if (dft_grid) {
    // K = F w with F_{kn} = omega^{nk}, and F conj(F) = N I.
    for (int n = 0; n < N; ++n) {
      cplx acc(0, 0);
      for (int k = 0; k < N; ++k)
        acc += std::polar(1.0, -kTwoPi * static_cast<double>(n) * k / N) * target_kernel[k];
      out.w[n] = acc / static_cast<double>(N);
    }
  } else {
    EMatC F(N, N);  // F_{kn} = lambda_n^(k+first_exponent)
    for (int n = 0; n < N; ++n) {
      cplx p = std::pow(spectrum.lambda[n], first_exponent);
      for (int k = 0; k < N; ++k) {
        F(k, n) = p;
        p *= spectrum.lambda[n];
      }
    }
    EVecC rhs(N);
    for (int k = 0; k < N; ++k) rhs(k) = target_kernel[k];
    EVecC w = F.colPivHouseholderQr().solve(rhs);
    for (int n = 0; n < N; ++n) out.w[n] = w(n);
  }

  double res = 0.0;
  for (int k = 0; k < N; ++k) {
    cplx acc(0, 0);
    for (int n = 0; n < N; ++n)
      acc += out.w[n] * std::pow(spectrum.lambda[n], k + first_exponent);
    res = std::max(res, std::abs(acc - target_kernel[k]));
  }
  out.residual = res;

  double scale = 1e-12;
  for (double k : target_kernel) scale = std::max(scale, std::abs(k));
  if (res > 1e-6 * scale)
    throw std::runtime_error("singular system, residual " + std::to_string(res));
  return out;
}

VandermondeStudy real_shift_solution(const std::vector<double>& lambdas) {
  const int N = static_cast<int>(lambdas.size());
  if (N < 1) throw std::invalid_argument("empty lambda set");
  for (int i = 0; i < N; ++i) {
    if (!(lambdas[i] > 0.0) || lambdas[i] > 1.0)
      throw std::invalid_argument("lambdas must lie in (0,1]");
    for (int j = i + 1; j < N; ++j)
      if (lambdas[i] == lambdas[j]) throw std::runtime_error("singular Vandermonde");
  }

  VandermondeStudy study;
  study.lambdas = lambdas;
  study.N = N;
  study.w.resize(N);

  if (N <= 20) {
    // Exact solve: doubles are dyadic rationals, so the system is rational
    // and Gaussian elimination introduces no rounding at all.
    std::vector<rational> lam(N);
    for (int i = 0; i < N; ++i) lam[i] = rational(lambdas[i]);

    // M[j][i] = lambda_i^{j+1}, rhs_j = [j == N-1]
    std::vector<std::vector<rational>> M(N, std::vector<rational>(N + 1, rational(0)));
    for (int i = 0; i < N; ++i) {
      rational p = lam[i];
      for (int j = 0; j < N; ++j) {
        M[j][i] = p;
        p *= lam[i];
      }
    }
    M[N - 1][N] = rational(1);

    for (int col = 0; col < N; ++col) {
      int pivot = -1;
      for (int r = col; r < N; ++r)
        if (M[r][col] != 0) {
          pivot = r;
          break;
        }
      if (pivot < 0) throw std::runtime_error("singular Vandermonde");
      std::swap(M[col], M[pivot]);
      for (int r = 0; r < N; ++r) {
        if (r == col || M[r][col] == 0) continue;
        rational f = M[r][col] / M[col][col];
        for (int c = col; c <= N; ++c) M[r][c] -= f * M[col][c];
      }
    }
    std::vector<rational> w(N);
    for (int i = 0; i < N; ++i) w[i] = M[i][N] / M[i][i];

    rational res(0);
    for (int j = 0; j < N; ++j) {
      rational acc(0);
      for (int i = 0; i < N; ++i) {
        rational p = lam[i];
        for (int e = 0; e < j; ++e) p *= lam[i];
        acc += w[i] * p;
      }
      rational target = (j == N - 1) ? rational(1) : rational(0);
      rational d = acc - target;
      if (d < 0) d = -d;
      if (d > res) res = d;
    }
    study.residual = static_cast<double>(res);
    double norm = 0.0;
    for (int i = 0; i < N; ++i) {
      study.w[i] = static_cast<double>(w[i]);
      norm = std::max(norm, std::abs(study.w[i]));
    }
    study.solution_norm = norm;
    return study;
  }

  // Double-precision least squares for larger sizes; the result is only
  // indicative there since the system is ill-conditioned by design.
  Eigen::MatrixXd M(N, N);
  for (int i = 0; i < N; ++i) {
    double p = lambdas[i];
    for (int j = 0; j < N; ++j) {
      M(j, i) = p;
      p *= lambdas[i];
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  rhs(N - 1) = 1.0;
  Eigen::VectorXd w = M.colPivHouseholderQr().solve(rhs);
  double norm = 0.0, res = 0.0;
  Eigen::VectorXd r = M * w - rhs;
  for (int i = 0; i < N; ++i) {
    study.w[i] = w(i);
    norm = std::max(norm, std::abs(w(i)));
    res = std::max(res, std::abs(r(i)));
  }
  study.solution_norm = norm;
  study.residual = res;
  return study;
}

double dft_grid_condition(int N) {
  EMatC P(N, N);  // P_{n,k} = lambda_n^k on the DFT grid
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < N; ++k)
      P(n, k) = std::polar(1.0, kTwoPi * static_cast<double>(n) * k / N);
  EMatC G = P.adjoint() * P;
  Eigen::SelfAdjointEigenSolver<EMatC> es(G, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(N - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

}  // namespace dlr
