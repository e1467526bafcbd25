#include "dlr/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "dlr/convolution.hpp"
#include "dlr/model.hpp"

namespace dlr::ad {

namespace {

// Frequency-domain state saved by the convolution ops for their adjoints.
struct ConvSaved {
  std::vector<cplx> uhat;  // [B*H*nfft]
  std::vector<cplx> khat;  // [H*nfft]
  long nfft = 0;
};

}  // namespace

void Tape::maybe_round(Tensor& t) const {
  if (!round_f32) return;
  for (double& x : t.v) x = static_cast<double>(static_cast<float>(x));
}

int Tape::push(Tensor v, std::function<void(Tape&)> back) {
  maybe_round(v);
  nodes.push_back(Node{std::move(v), Tensor{}, std::move(back)});
  return static_cast<int>(nodes.size()) - 1;
}

int Tape::leaf(Tensor v) {
  nodes.push_back(Node{std::move(v), Tensor{}, nullptr});
  return static_cast<int>(nodes.size()) - 1;
}

void Tape::backward(int loss_id) {
  if (val(loss_id).numel() != 1) throw std::invalid_argument("loss must be scalar");
  for (int i = 0; i <= loss_id; ++i) {
    Node& n = nodes[static_cast<size_t>(i)];
    n.grad = Tensor(n.val.shape);
  }
  grad(loss_id).v[0] = 1.0;
  for (int i = loss_id; i >= 0; --i) {
    Node& n = nodes[static_cast<size_t>(i)];
    if (n.back) n.back(*this);
  }
}

int Tape::dlr_kernel_op(int log_re, int log_im, int w_re, int w_im, long L, CastMode cast) {
  const Tensor& r = val(log_re);
  const Tensor& th = val(log_im);
  const Tensor& wr = val(w_re);
  const Tensor& wi = val(w_im);
  const int N = static_cast<int>(r.numel());
  if (th.numel() != N || wr.rank() != 2 || wr.dim(1) != N || !wr.same_shape(wi))
    throw std::invalid_argument("shape mismatch");
  const int H = static_cast<int>(wr.dim(0));

  // lambda and the N x L power matrix, kept for the backward pass.
  auto lambda = std::make_shared<std::vector<cplx>>(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    const double mag = std::exp(-r.at(n) * r.at(n));
    (*lambda)[n] = cplx(mag * std::cos(th.at(n)), mag * std::sin(th.at(n)));
  }
  auto P = std::make_shared<std::vector<cplx>>(static_cast<size_t>(N) * L);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    cplx p(1, 0);
    cplx* row = &(*P)[static_cast<size_t>(n) * L];
    for (long k = 0; k < L; ++k) {
      row[k] = p;
      p *= (*lambda)[n];
    }
  }

  auto Kc = std::make_shared<std::vector<cplx>>(static_cast<size_t>(H) * L, cplx(0, 0));
#pragma omp parallel for schedule(static)
  for (int h = 0; h < H; ++h) {
    cplx* out = &(*Kc)[static_cast<size_t>(h) * L];
    for (int n = 0; n < N; ++n) {
      const cplx wn(wr.at(h, n), wi.at(h, n));
      const cplx* row = &(*P)[static_cast<size_t>(n) * L];
      for (long k = 0; k < L; ++k) out[k] += wn * row[k];
    }
  }

  Tensor out({static_cast<long>(H), L});
  if (cast == CastMode::Real) {
    for (long i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] = (*Kc)[i].real();
  } else {
    for (long i = 0; i < out.numel(); ++i)
      out.v[static_cast<size_t>(i)] = (*Kc)[i].real() * (*Kc)[i].imag();
  }

  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& wrv = t.val(w_re);
    const Tensor& wiv = t.val(w_im);
    const Tensor& rv = t.val(log_re);

    // Upstream gradient as a complex matrix G[H,L].
    std::vector<cplx> G(static_cast<size_t>(H) * L);
    if (cast == CastMode::Real) {
      for (size_t i = 0; i < G.size(); ++i) G[i] = cplx(g.v[i], 0.0);
    } else {
      // out = Re(Kc) * Im(Kc)
      for (size_t i = 0; i < G.size(); ++i)
        G[i] = cplx(g.v[i] * (*Kc)[i].imag(), g.v[i] * (*Kc)[i].real());
    }

    Tensor& gwr = t.grad(w_re);
    Tensor& gwi = t.grad(w_im);
#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h) {
      const cplx* gh = &G[static_cast<size_t>(h) * L];
      for (int n = 0; n < N; ++n) {
        const cplx* pn = &(*P)[static_cast<size_t>(n) * L];
        cplx acc(0, 0);
        for (long k = 0; k < L; ++k) acc += gh[k] * std::conj(pn[k]);
        gwr.at(h, n) += acc.real();
        gwi.at(h, n) += acc.imag();
      }
    }

    Tensor& gr = t.grad(log_re);
    Tensor& gth = t.grad(log_im);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
      const cplx* pn = &(*P)[static_cast<size_t>(n) * L];
      // gP[n,k] = sum_h conj(W[h,n]) G[h,k]; fold directly into the
      // log-parameter gradients through s_n = sum_k k gP[n,k] conj(P[n,k]).
      cplx s(0, 0);
      for (long k = 1; k < L; ++k) {
        cplx gp(0, 0);
        for (int h = 0; h < H; ++h) {
          const cplx wn(wrv.at(h, n), wiv.at(h, n));
          gp += std::conj(wn) * G[static_cast<size_t>(h) * L + k];
        }
        s += static_cast<double>(k) * gp * std::conj(pn[k]);
      }
      gr.at(n) += -2.0 * rv.at(n) * s.real();
      gth.at(n) += s.imag();
    }
  });
}

namespace {

// Shared forward for both convolution flavours. Fills y (first L of the
// circulant product) and the saved spectra.
void circulant_forward(const Tensor& u, const std::vector<cplx>& khat, long nfft, Tensor& y,
                       std::vector<cplx>& uhat) {
  const long B = u.dim(0), H = u.dim(1), L = u.dim(2);
  auto plan = get_fft_plan(nfft);
  const long rows = B * H;
  uhat.assign(static_cast<size_t>(rows) * nfft, cplx(0, 0));
#pragma omp parallel
  {
    std::vector<cplx> buf(static_cast<size_t>(nfft));
#pragma omp for schedule(static)
    for (long rix = 0; rix < rows; ++rix) {
      const long b = rix / H, h = rix % H;
      const double* in = &u.v[static_cast<size_t>((b * H + h) * L)];
      cplx* uh = &uhat[static_cast<size_t>(rix) * nfft];
      for (long j = 0; j < L; ++j) uh[j] = in[j];
      fft_inplace(uh, *plan);
      const cplx* kh = &khat[static_cast<size_t>(h) * nfft];
      for (long j = 0; j < nfft; ++j) buf[static_cast<size_t>(j)] = uh[j] * kh[j];
      ifft_inplace(buf.data(), *plan);
      double* out = &y.v[static_cast<size_t>((b * H + h) * L)];
      for (long j = 0; j < L; ++j) out[j] = buf[static_cast<size_t>(j)].real();
    }
  }
}

// Adjoint w.r.t. the input plus the per-channel circulant-kernel gradient
// accumulated over the batch (in frequency domain, one inverse FFT per h).
void circulant_backward(const Tensor& g, const ConvSaved& saved, long B, long H, long L,
                        Tensor& gu, std::vector<cplx>& gc) {
  const long nfft = saved.nfft;
  auto plan = get_fft_plan(nfft);
  const long rows = B * H;
  std::vector<cplx> ghat(static_cast<size_t>(rows) * nfft, cplx(0, 0));
#pragma omp parallel
  {
    std::vector<cplx> buf(static_cast<size_t>(nfft));
#pragma omp for schedule(static)
    for (long rix = 0; rix < rows; ++rix) {
      const long b = rix / H, h = rix % H;
      const double* gin = &g.v[static_cast<size_t>((b * H + h) * L)];
      cplx* gh = &ghat[static_cast<size_t>(rix) * nfft];
      for (long j = 0; j < L; ++j) gh[j] = gin[j];
      fft_inplace(gh, *plan);
      const cplx* kh = &saved.khat[static_cast<size_t>(h) * nfft];
      for (long j = 0; j < nfft; ++j) buf[static_cast<size_t>(j)] = std::conj(kh[j]) * gh[j];
      ifft_inplace(buf.data(), *plan);
      double* out = &gu.v[static_cast<size_t>((b * H + h) * L)];
      for (long j = 0; j < L; ++j) out[j] += buf[static_cast<size_t>(j)].real();
    }
  }
  gc.assign(static_cast<size_t>(H) * nfft, cplx(0, 0));
#pragma omp parallel
  {
    std::vector<cplx> acc(static_cast<size_t>(nfft));
#pragma omp for schedule(static)
    for (long h = 0; h < H; ++h) {
      std::fill(acc.begin(), acc.end(), cplx(0, 0));
      for (long b = 0; b < B; ++b) {
        const cplx* gh = &ghat[static_cast<size_t>((b * H + h)) * nfft];
        const cplx* uh = &saved.uhat[static_cast<size_t>((b * H + h)) * nfft];
        for (long j = 0; j < nfft; ++j) acc[static_cast<size_t>(j)] += gh[j] * std::conj(uh[j]);
      }
      ifft_inplace(acc.data(), *plan);
      std::copy(acc.begin(), acc.end(), gc.begin() + static_cast<long>(h) * nfft);
    }
  }
}

}  // namespace

int Tape::causal_conv_op(int u, int k) {
  const Tensor& uv = val(u);
  const Tensor& kv = val(k);
  if (uv.rank() != 3 || kv.rank() != 2 || uv.dim(1) != kv.dim(0) || uv.dim(2) != kv.dim(1))
    throw std::invalid_argument("shape mismatch");
  const long B = uv.dim(0), H = uv.dim(1), L = uv.dim(2);
  const long nfft = next_pow2(2 * L);
  auto plan = get_fft_plan(nfft);

  auto saved = std::make_shared<ConvSaved>();
  saved->nfft = nfft;
  saved->khat.assign(static_cast<size_t>(H) * nfft, cplx(0, 0));
#pragma omp parallel for schedule(static)
  for (long h = 0; h < H; ++h) {
    cplx* row = &saved->khat[static_cast<size_t>(h) * nfft];
    for (long j = 0; j < L; ++j) row[j] = kv.at(h, j);
    fft_inplace(row, *plan);
  }

  Tensor y({B, H, L});
  circulant_forward(uv, saved->khat, nfft, y, saved->uhat);

  const int self = static_cast<int>(nodes.size());
  return push(std::move(y), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    std::vector<cplx> gc;
    circulant_backward(g, *saved, B, H, L, t.grad(u), gc);
    Tensor& gk = t.grad(k);
    for (long h = 0; h < H; ++h)
      for (long j = 0; j < L; ++j) gk.at(h, j) += gc[static_cast<size_t>(h) * saved->nfft + j].real();
  });
}

int Tape::bidir_conv_op(int u, int kf, int kb) {
  const Tensor& uv = val(u);
  const Tensor& kfv = val(kf);
  const Tensor& kbv = val(kb);
  if (uv.rank() != 3 || kfv.rank() != 2 || !kfv.same_shape(kbv) || uv.dim(1) != kfv.dim(0) ||
      uv.dim(2) != kfv.dim(1))
    throw std::invalid_argument("shape mismatch");
  const long B = uv.dim(0), H = uv.dim(1), L = uv.dim(2);
  const long nfft = next_pow2(2 * L);
  auto plan = get_fft_plan(nfft);

  auto saved = std::make_shared<ConvSaved>();
  saved->nfft = nfft;
  saved->khat.assign(static_cast<size_t>(H) * nfft, cplx(0, 0));
#pragma omp parallel for schedule(static)
  for (long h = 0; h < H; ++h) {
    cplx* row = &saved->khat[static_cast<size_t>(h) * nfft];
    for (long j = 0; j < L; ++j) row[j] = kfv.at(h, j);
    for (long m = 0; m + 1 < L; ++m) row[nfft - 1 - m] = kbv.at(h, m);
    fft_inplace(row, *plan);
  }

  Tensor y({B, H, L});
  circulant_forward(uv, saved->khat, nfft, y, saved->uhat);

  const int self = static_cast<int>(nodes.size());
  return push(std::move(y), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    std::vector<cplx> gc;
    circulant_backward(g, *saved, B, H, L, t.grad(u), gc);
    Tensor& gkf = t.grad(kf);
    Tensor& gkb = t.grad(kb);
    for (long h = 0; h < H; ++h) {
      const cplx* row = &gc[static_cast<size_t>(h) * saved->nfft];
      for (long j = 0; j < L; ++j) gkf.at(h, j) += row[j].real();
      for (long m = 0; m + 1 < L; ++m) gkb.at(h, m) += row[saved->nfft - 1 - m].real();
    }
  });
}

int Tape::add_op(int a, int b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (!av.same_shape(bv)) throw std::invalid_argument("shape mismatch");
  Tensor out(av.shape);
  for (long i = 0; i < out.numel(); ++i)
    out.v[static_cast<size_t>(i)] = av.v[static_cast<size_t>(i)] + bv.v[static_cast<size_t>(i)];
  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    Tensor& gb = t.grad(b);
    for (long i = 0; i < g.numel(); ++i) {
      ga.v[static_cast<size_t>(i)] += g.v[static_cast<size_t>(i)];
      gb.v[static_cast<size_t>(i)] += g.v[static_cast<size_t>(i)];
    }
  });
}

int Tape::gelu_op(int x) {
  const Tensor& xv = val(x);
  Tensor out(xv.shape);
  for (long i = 0; i < out.numel(); ++i)
    out.v[static_cast<size_t>(i)] = gelu(xv.v[static_cast<size_t>(i)]);
  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& xin = t.val(x);
    Tensor& gx = t.grad(x);
    for (long i = 0; i < g.numel(); ++i)
      gx.v[static_cast<size_t>(i)] +=
          g.v[static_cast<size_t>(i)] * gelu_grad(xin.v[static_cast<size_t>(i)]);
  });
}

int Tape::linear_op(int x, int w, int b) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  if (xv.rank() != 3 || wv.rank() != 2 || xv.dim(2) != wv.dim(0))
    throw std::invalid_argument("shape mismatch");
  const long B = xv.dim(0), L = xv.dim(1), Di = xv.dim(2), Do = wv.dim(1);
  if (b >= 0 && val(b).numel() != Do) throw std::invalid_argument("shape mismatch");

  Tensor out({B, L, Do});
  const long rows = B * L;
#pragma omp parallel for schedule(static)
  for (long rix = 0; rix < rows; ++rix) {
    const double* xin = &xv.v[static_cast<size_t>(rix * Di)];
    double* o = &out.v[static_cast<size_t>(rix * Do)];
    for (long j = 0; j < Do; ++j) {
      double acc = b >= 0 ? val(b).v[static_cast<size_t>(j)] : 0.0;
      for (long d = 0; d < Di; ++d) acc += xin[d] * wv.at(d, j);
      o[j] = acc;
    }
  }

  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& xin = t.val(x);
    const Tensor& win = t.val(w);
    Tensor& gx = t.grad(x);
    Tensor& gw = t.grad(w);
#pragma omp parallel for schedule(static)
    for (long rix = 0; rix < rows; ++rix) {
      const double* grow = &g.v[static_cast<size_t>(rix * Do)];
      double* gxr = &gx.v[static_cast<size_t>(rix * Di)];
      for (long d = 0; d < Di; ++d) {
        double acc = 0.0;
        for (long j = 0; j < Do; ++j) acc += grow[j] * win.at(d, j);
        gxr[d] += acc;
      }
    }
    // Weight and bias gradients accumulate serially over rows so results do
    // not depend on the thread count.
    for (long rix = 0; rix < rows; ++rix) {
      const double* grow = &g.v[static_cast<size_t>(rix * Do)];
      const double* xrow = &xin.v[static_cast<size_t>(rix * Di)];
      for (long d = 0; d < Di; ++d)
        for (long j = 0; j < Do; ++j) gw.at(d, j) += xrow[d] * grow[j];
    }
    if (b >= 0) {
      Tensor& gb = t.grad(b);
      for (long rix = 0; rix < rows; ++rix) {
        const double* grow = &g.v[static_cast<size_t>(rix * Do)];
        for (long j = 0; j < Do; ++j) gb.v[static_cast<size_t>(j)] += grow[j];
      }
    }
  });
}

int Tape::channel_mix_op(int x, int w) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  if (xv.rank() != 3 || wv.rank() != 2 || xv.dim(1) != wv.dim(0) || wv.dim(0) != wv.dim(1))
    throw std::invalid_argument("shape mismatch");
  const long B = xv.dim(0), H = xv.dim(1), L = xv.dim(2);

  Tensor out({B, H, L});
#pragma omp parallel for schedule(static)
  for (long b = 0; b < B; ++b)
    for (long l = 0; l < L; ++l)
      for (long ho = 0; ho < H; ++ho) {
        double acc = 0.0;
        for (long h = 0; h < H; ++h) acc += xv.at(b, h, l) * wv.at(h, ho);
        out.at(b, ho, l) = acc;
      }

  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    const Tensor& xin = t.val(x);
    const Tensor& win = t.val(w);
    Tensor& gx = t.grad(x);
    Tensor& gw = t.grad(w);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < B; ++b)
      for (long h = 0; h < H; ++h)
        for (long l = 0; l < L; ++l) {
          double acc = 0.0;
          for (long ho = 0; ho < H; ++ho) acc += g.at(b, ho, l) * win.at(h, ho);
          gx.at(b, h, l) += acc;
        }
#pragma omp parallel for schedule(static) collapse(2)
    for (long h = 0; h < H; ++h)
      for (long ho = 0; ho < H; ++ho) {
        double acc = 0.0;
        for (long b = 0; b < B; ++b)
          for (long l = 0; l < L; ++l) acc += xin.at(b, h, l) * g.at(b, ho, l);
        gw.at(h, ho) += acc;
      }
  });
}

int Tape::transpose12_op(int x) {
  const Tensor& xv = val(x);
  if (xv.rank() != 3) throw std::invalid_argument("expected rank-3 input");
  const long B = xv.dim(0), D1 = xv.dim(1), D2 = xv.dim(2);
  Tensor out({B, D2, D1});
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < D1; ++i)
      for (long j = 0; j < D2; ++j) out.at(b, j, i) = xv.at(b, i, j);
  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(x);
    for (long b = 0; b < B; ++b)
      for (long i = 0; i < D1; ++i)
        for (long j = 0; j < D2; ++j) gx.at(b, i, j) += g.at(b, j, i);
  });
}

int Tape::layer_norm_op(int x, double eps) {
  const Tensor& xv = val(x);
  if (xv.rank() != 3) throw std::invalid_argument("expected B x H x L input");
  const long B = xv.dim(0), H = xv.dim(1), L = xv.dim(2);

  Tensor out({B, H, L});
  auto inv = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * L);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < B; ++b)
    for (long l = 0; l < L; ++l) {
      double mean = 0.0;
      for (long h = 0; h < H; ++h) mean += xv.at(b, h, l);
      mean /= static_cast<double>(H);
      double var = 0.0;
      for (long h = 0; h < H; ++h) {
        const double d = xv.at(b, h, l) - mean;
        var += d * d;
      }
      var /= static_cast<double>(H);
      const double iv = 1.0 / std::sqrt(var + eps);
      (*inv)[static_cast<size_t>(b * L + l)] = iv;
      for (long h = 0; h < H; ++h) out.at(b, h, l) = (xv.at(b, h, l) - mean) * iv;
    }

  // Keep the normalized values for the backward pass.
  auto xhat = std::make_shared<Tensor>(out);
  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(x);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < B; ++b)
      for (long l = 0; l < L; ++l) {
        double gm = 0.0, gxm = 0.0;
        for (long h = 0; h < H; ++h) {
          gm += g.at(b, h, l);
          gxm += g.at(b, h, l) * xhat->at(b, h, l);
        }
        gm /= static_cast<double>(H);
        gxm /= static_cast<double>(H);
        const double iv = (*inv)[static_cast<size_t>(b * L + l)];
        for (long h = 0; h < H; ++h)
          gx.at(b, h, l) += iv * (g.at(b, h, l) - gm - xhat->at(b, h, l) * gxm);
      }
  });
}

int Tape::slice_tail_op(int x, long keep_len) {
  const Tensor& xv = val(x);
  if (xv.rank() != 3 || keep_len < 0 || keep_len > xv.dim(1))
    throw std::invalid_argument("shape mismatch");
  const long B = xv.dim(0), L = xv.dim(1), D = xv.dim(2);
  const long off = L - keep_len;
  Tensor out({B, keep_len, D});
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < keep_len; ++i)
      for (long d = 0; d < D; ++d) out.at(b, i, d) = xv.at(b, off + i, d);
  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(x);
    for (long b = 0; b < B; ++b)
      for (long i = 0; i < keep_len; ++i)
        for (long d = 0; d < D; ++d) gx.at(b, off + i, d) += g.at(b, i, d);
  });
}

int Tape::mse_op(int pred, const Tensor& target) {
  const Tensor& pv = val(pred);
  if (!pv.same_shape(target)) throw std::invalid_argument("shape mismatch");
  const long n = pv.numel();
  auto tgt = std::make_shared<Tensor>(target);
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    const double d = pv.v[static_cast<size_t>(i)] - target.v[static_cast<size_t>(i)];
    acc += d * d;
  }
  Tensor out({1});
  out.v[0] = acc / static_cast<double>(n);
  const int self = static_cast<int>(nodes.size());
  return push(std::move(out), [=](Tape& t) {
    const double gl = t.grad(self).v[0];
    const Tensor& p = t.val(pred);
    Tensor& gp = t.grad(pred);
    const double scale = 2.0 * gl / static_cast<double>(n);
    for (long i = 0; i < n; ++i)
      gp.v[static_cast<size_t>(i)] +=
          scale * (p.v[static_cast<size_t>(i)] - tgt->v[static_cast<size_t>(i)]);
  });
}

}  // namespace dlr::ad
