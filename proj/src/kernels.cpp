#include "dlr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dlr/rng.hpp"

namespace dlr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool all_finite(const std::vector<double>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

bool all_finite(const std::vector<cplx>& x) {
  for (const cplx& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

}  // namespace

void DlrParams::validate() const {
  if (N <= 0 || H <= 0) throw std::invalid_argument("invalid parameters: empty sizes");
  if (static_cast<int>(log_re.size()) != N || static_cast<int>(log_im.size()) != N ||
      static_cast<long>(W.size()) != static_cast<long>(H) * N)
    throw std::invalid_argument("invalid parameters: shape mismatch");
  if (!all_finite(log_re) || !all_finite(log_im) || !all_finite(W))
    throw std::invalid_argument("invalid parameters");
}

ComplexSpectrum materialize_lambda(const DlrParams& params) {
  params.validate();
  ComplexSpectrum s;
  s.lambda.resize(params.N);
  for (int n = 0; n < params.N; ++n) {
    double mag = std::exp(-params.log_re[n] * params.log_re[n]);
    s.lambda[n] = cplx(mag * std::cos(params.log_im[n]), mag * std::sin(params.log_im[n]));
  }
  return s;
}

std::vector<cplx> dlr_kernel(const ComplexSpectrum& spectrum, const std::vector<cplx>& W,
                             int H, long L) {
  const int N = spectrum.size();
  if (L < 1) throw std::invalid_argument("kernel length must be >= 1");
  if (static_cast<long>(W.size()) != static_cast<long>(H) * N)
    throw std::invalid_argument("read-out shape mismatch");
  if (L > 1) {
    for (const cplx& l : spectrum.lambda)
      if (std::abs(l) > 1.0 + kStabilityEps) throw std::domain_error("unstable spectrum");
  }

  std::vector<cplx> K(static_cast<size_t>(H) * L, cplx(0.0, 0.0));

  // Column-blocked so the N x L power matrix never needs to exist in full.
  const long block = std::max<long>(1, std::min<long>(L, (1L << 22) / std::max(N, 1)));
  std::vector<cplx> carry(spectrum.lambda.size(), cplx(1.0, 0.0));  // lambda^k at block start
  std::vector<cplx> P(static_cast<size_t>(N) * block);

  for (long k0 = 0; k0 < L; k0 += block) {
    const long bc = std::min(block, L - k0);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
      cplx p = carry[n];
      const cplx l = spectrum.lambda[n];
      cplx* row = &P[static_cast<size_t>(n) * block];
      for (long j = 0; j < bc; ++j) {
        row[j] = p;
        p *= l;
      }
      carry[n] = p;
    }
#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h) {
      const cplx* w = &W[static_cast<size_t>(h) * N];
      cplx* out = &K[static_cast<size_t>(h) * L + k0];
      for (int n = 0; n < N; ++n) {
        const cplx wn = w[n];
        const cplx* row = &P[static_cast<size_t>(n) * block];
        for (long j = 0; j < bc; ++j) out[j] += wn * row[j];
      }
    }
  }
  return K;
}

Kernel cast_kernel(const std::vector<cplx>& Kc, int H, long L, CastMode mode) {
  if (static_cast<long>(Kc.size()) != static_cast<long>(H) * L)
    throw std::invalid_argument("kernel shape mismatch");
  Kernel k;
  k.H = H;
  k.L = L;
  k.cast = mode;
  k.values.resize(Kc.size());
  if (mode == CastMode::Real) {
    for (size_t i = 0; i < Kc.size(); ++i) k.values[i] = Kc[i].real();
  } else {
    for (size_t i = 0; i < Kc.size(); ++i) k.values[i] = Kc[i].real() * Kc[i].imag();
  }
  return k;
}

std::pair<Kernel, Kernel> bidirectional_kernels(const DlrParams& fwd, const DlrParams& bwd,
                                                long L, CastMode mode) {
  if (fwd.H != bwd.H) throw std::invalid_argument("channel counts differ");
  Kernel kf = cast_kernel(dlr_kernel(materialize_lambda(fwd), fwd.W, fwd.H, L), fwd.H, L, mode);
  Kernel kb = cast_kernel(dlr_kernel(materialize_lambda(bwd), bwd.W, bwd.H, L), bwd.H, L, mode);
  return {std::move(kf), std::move(kb)};
}

std::pair<ComplexSpectrum, std::vector<cplx>> kronecker_product(
    const ComplexSpectrum& lambda_a, const std::vector<cplx>& w_a,
    const ComplexSpectrum& lambda_b, const std::vector<cplx>& w_b) {
  const int M = lambda_a.size();
  const int N = lambda_b.size();
  if (static_cast<int>(w_a.size()) != M || static_cast<int>(w_b.size()) != N)
    throw std::invalid_argument("weight sizes must match spectrum sizes");
  ComplexSpectrum out;
  out.lambda.resize(static_cast<size_t>(M) * N);
  std::vector<cplx> w(static_cast<size_t>(M) * N);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      out.lambda[static_cast<size_t>(m) * N + n] = lambda_a.lambda[m] * lambda_b.lambda[n];
      w[static_cast<size_t>(m) * N + n] = w_a[m] * w_b[n];
    }
  return {std::move(out), std::move(w)};
}

Kernel dss_exp_kernel(const DssParams& params, long L) {
  const int N = params.N;
  const int H = params.H;
  if (static_cast<int>(params.lambda.size()) != N ||
      static_cast<long>(params.W.size()) != static_cast<long>(H) * N ||
      static_cast<int>(params.log_delta.size()) != H)
    throw std::invalid_argument("invalid parameters: shape mismatch");
  for (const cplx& l : params.lambda)
    if (std::abs(l) < 1e-12) throw std::domain_error("division by near-zero eigenvalue");

  Kernel k;
  k.H = H;
  k.L = L;
  k.cast = CastMode::Real;
  k.values.resize(static_cast<size_t>(H) * L);

  // The step size differs per channel, so each channel gets its own
  // discretized spectrum and weights.
  for (int h = 0; h < H; ++h) {
    const double delta = std::exp(params.log_delta[h]);
    ComplexSpectrum disc;
    disc.lambda.resize(N);
    std::vector<cplx> w(N);
    for (int n = 0; n < N; ++n) {
      const cplx lam_bar = std::exp(delta * params.lambda[n]);
      disc.lambda[n] = lam_bar;
      w[n] = params.W[static_cast<size_t>(h) * N + n] * (lam_bar - 1.0) / params.lambda[n];
    }
    std::vector<cplx> row = dlr_kernel(disc, w, 1, L);
    for (long j = 0; j < L; ++j) k.values[static_cast<size_t>(h) * L + j] = row[j].real();
  }
  return k;
}

DlrParams init_dlr(int N, int H, uint64_t seed, InitScheme scheme) {
  if (N < 1 || H < 1) throw std::invalid_argument("invalid parameters: empty sizes");
  DlrParams p;
  p.N = N;
  p.H = H;
  p.log_im.resize(N);
  for (int n = 0; n < N; ++n) p.log_im[n] = kTwoPi * n / N;

  Rng rng(mix_seed(seed, 0x1d7a));
  p.log_re.assign(N, 0.0);
  if (scheme == InitScheme::Default) {
    for (int n = 0; n < N; ++n) {
      double r = rng.uniform(std::log(0.0005), std::log(0.5));
      p.log_re[n] = std::sqrt(std::exp(r) / 2.0);
    }
  }
  p.W.resize(static_cast<size_t>(H) * N);
  const double sigma = 1.0 / N;
  for (auto& w : p.W) w = cplx(sigma * rng.normal(), sigma * rng.normal());
  return p;
}

DssParams init_dss(int N, int H, uint64_t seed, double dt_min, double dt_max) {
  if (N < 1 || H < 1) throw std::invalid_argument("invalid parameters: empty sizes");
  if (!(dt_min > 0.0) || dt_min > dt_max)
    throw std::invalid_argument("invalid parameters: step-size range");
  DssParams p;
  p.N = N;
  p.H = H;
  p.lambda.resize(N);
  for (int n = 0; n < N; ++n) p.lambda[n] = cplx(-0.5, kTwoPi * n);

  Rng rng(mix_seed(seed, 0xd55e));
  p.log_delta.resize(H);
  for (int h = 0; h < H; ++h) p.log_delta[h] = rng.uniform(std::log(dt_min), std::log(dt_max));
  p.W.resize(static_cast<size_t>(H) * N);
  const double sigma = 1.0 / N;
  for (auto& w : p.W) w = cplx(sigma * rng.normal(), sigma * rng.normal());
  return p;
}

}  // namespace dlr
