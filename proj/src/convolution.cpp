#include "dlr/convolution.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace dlr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr long kNaiveGuard = 1L << 14;

void check_conv_shapes(const SequenceBatch& u, const Kernel& K) {
  if (K.L != u.L || K.H != u.H) throw std::invalid_argument("shape mismatch");
}

}  // namespace

FftPlan::FftPlan(long n) : size(n) {
  if (n < 2 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft size must be a power of two >= 2");
  twiddle.resize(static_cast<size_t>(n / 2));
  for (long k = 0; k < n / 2; ++k)
    twiddle[static_cast<size_t>(k)] = std::polar(1.0, -kTwoPi * static_cast<double>(k) / n);

  int lg = 0;
  while ((1L << lg) < n) ++lg;
  bitrev.resize(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    uint32_t r = 0;
    for (int b = 0; b < lg; ++b)
      if (i & (1L << b)) r |= 1u << (lg - 1 - b);
    bitrev[static_cast<size_t>(i)] = r;
  }
}

std::shared_ptr<const FftPlan> get_fft_plan(long n) {
  static std::mutex mu;
  static std::map<long, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FftPlan>(n);
  cache.emplace(n, plan);
  return plan;
}

void fft_inplace(cplx* x, const FftPlan& plan) {
  const long n = plan.size;
  for (long i = 0; i < n; ++i) {
    const long j = plan.bitrev[static_cast<size_t>(i)];
    if (i < j) std::swap(x[i], x[j]);
  }
  for (long len = 2; len <= n; len <<= 1) {
    const long half = len >> 1;
    const long stride = n / len;
    for (long start = 0; start < n; start += len) {
      for (long k = 0; k < half; ++k) {
        const cplx w = plan.twiddle[static_cast<size_t>(k * stride)];
        const cplx a = x[start + k];
        const cplx t = w * x[start + k + half];
        x[start + k] = a + t;
        x[start + k + half] = a - t;
      }
    }
  }
}

void ifft_inplace(cplx* x, const FftPlan& plan) {
  const long n = plan.size;
  for (long i = 0; i < n; ++i) x[i] = std::conj(x[i]);
  fft_inplace(x, plan);
  const double inv = 1.0 / static_cast<double>(n);
  for (long i = 0; i < n; ++i) x[i] = std::conj(x[i]) * inv;
}

std::vector<cplx> fft(const std::vector<cplx>& x, const FftPlan& plan) {
  if (static_cast<long>(x.size()) != plan.size)
    throw std::invalid_argument("fft input length does not match plan");
  std::vector<cplx> y = x;
  fft_inplace(y.data(), plan);
  return y;
}

std::vector<cplx> ifft(const std::vector<cplx>& X, const FftPlan& plan) {
  if (static_cast<long>(X.size()) != plan.size)
    throw std::invalid_argument("fft input length does not match plan");
  std::vector<cplx> y = X;
  ifft_inplace(y.data(), plan);
  return y;
}

long next_pow2(long n) {
  long p = 2;
  while (p < n) p <<= 1;
  return p;
}

SequenceBatch causal_conv(const SequenceBatch& u, const Kernel& K) {
  check_conv_shapes(u, K);
  const long L = u.L;
  const long nfft = next_pow2(2 * L);
  auto plan = get_fft_plan(nfft);

  // Kernel spectra are shared across the batch.
  std::vector<cplx> khat(static_cast<size_t>(K.H) * nfft, cplx(0, 0));
#pragma omp parallel for schedule(static)
  for (int h = 0; h < K.H; ++h) {
    cplx* row = &khat[static_cast<size_t>(h) * nfft];
    for (long j = 0; j < L; ++j) row[j] = K.at(h, j);
    fft_inplace(row, *plan);
  }

  SequenceBatch y(u.B, u.H, L);
  const long rows = static_cast<long>(u.B) * u.H;
#pragma omp parallel
  {
    std::vector<cplx> buf(static_cast<size_t>(nfft));
#pragma omp for schedule(static)
    for (long r = 0; r < rows; ++r) {
      const int b = static_cast<int>(r / u.H);
      const int h = static_cast<int>(r % u.H);
      const double* in = u.row(b, h);
      for (long j = 0; j < L; ++j) buf[static_cast<size_t>(j)] = in[j];
      for (long j = L; j < nfft; ++j) buf[static_cast<size_t>(j)] = cplx(0, 0);
      fft_inplace(buf.data(), *plan);
      const cplx* kh = &khat[static_cast<size_t>(h) * nfft];
      for (long j = 0; j < nfft; ++j) buf[static_cast<size_t>(j)] *= kh[j];
      ifft_inplace(buf.data(), *plan);
      double* out = y.row(b, h);
      for (long j = 0; j < L; ++j) out[j] = buf[static_cast<size_t>(j)].real();
    }
  }
  return y;
}

SequenceBatch bidirectional_conv(const SequenceBatch& u, const Kernel& Kf, const Kernel& Kb) {
  check_conv_shapes(u, Kf);
  check_conv_shapes(u, Kb);
  const long L = u.L;
  const long nfft = next_pow2(2 * L);
  auto plan = get_fft_plan(nfft);

  std::vector<cplx> khat(static_cast<size_t>(Kf.H) * nfft, cplx(0, 0));
#pragma omp parallel for schedule(static)
  for (int h = 0; h < Kf.H; ++h) {
    cplx* row = &khat[static_cast<size_t>(h) * nfft];
    for (long j = 0; j < L; ++j) row[j] = Kf.at(h, j);
    // Backward tap m applies to u_{k+m+1}: lag -(m+1) lives at index nfft-1-m.
    for (long m = 0; m + 1 < L; ++m) row[nfft - 1 - m] = Kb.at(h, m);
    fft_inplace(row, *plan);
  }

  SequenceBatch y(u.B, u.H, L);
  const long rows = static_cast<long>(u.B) * u.H;
#pragma omp parallel
  {
    std::vector<cplx> buf(static_cast<size_t>(nfft));
#pragma omp for schedule(static)
    for (long r = 0; r < rows; ++r) {
      const int b = static_cast<int>(r / u.H);
      const int h = static_cast<int>(r % u.H);
      const double* in = u.row(b, h);
      for (long j = 0; j < L; ++j) buf[static_cast<size_t>(j)] = in[j];
      for (long j = L; j < nfft; ++j) buf[static_cast<size_t>(j)] = cplx(0, 0);
      fft_inplace(buf.data(), *plan);
      const cplx* kh = &khat[static_cast<size_t>(h) * nfft];
      for (long j = 0; j < nfft; ++j) buf[static_cast<size_t>(j)] *= kh[j];
      ifft_inplace(buf.data(), *plan);
      double* out = y.row(b, h);
      for (long j = 0; j < L; ++j) out[j] = buf[static_cast<size_t>(j)].real();
    }
  }
  return y;
}

SequenceBatch naive_causal_conv(const SequenceBatch& u, const Kernel& K) {
  check_conv_shapes(u, K);
  if (u.L > kNaiveGuard) throw std::length_error("length guard exceeded");
  SequenceBatch y(u.B, u.H, u.L);
  for (int b = 0; b < u.B; ++b)
    for (int h = 0; h < u.H; ++h) {
      const double* in = u.row(b, h);
      double* out = y.row(b, h);
      for (long k = 0; k < u.L; ++k) {
        double acc = 0.0;
        for (long j = 0; j <= k; ++j) acc += K.at(h, j) * in[k - j];
        out[k] = acc;
      }
    }
  return y;
}

SequenceBatch naive_bidirectional_conv(const SequenceBatch& u, const Kernel& Kf,
                                       const Kernel& Kb) {
  check_conv_shapes(u, Kf);
  check_conv_shapes(u, Kb);
  if (u.L > kNaiveGuard) throw std::length_error("length guard exceeded");
  SequenceBatch y(u.B, u.H, u.L);
  for (int b = 0; b < u.B; ++b)
    for (int h = 0; h < u.H; ++h) {
      const double* in = u.row(b, h);
      double* out = y.row(b, h);
      for (long k = 0; k < u.L; ++k) {
        double acc = 0.0;
        for (long j = 0; j <= k; ++j) acc += Kf.at(h, k - j) * in[j];
        for (long j = k + 1; j < u.L; ++j) acc += Kb.at(h, j - (k + 1)) * in[j];
        out[k] = acc;
      }
    }
  return y;
}

}  // namespace dlr
