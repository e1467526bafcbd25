#include "dlr/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "dlr/model.hpp"
#include "dlr/rng.hpp"

namespace dlr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> sample_normalized(Rng& rng, long n) {
  std::vector<double> x(static_cast<size_t>(n));
  double norm = 0.0;
  for (double& v : x) {
    v = rng.normal();
    norm = std::max(norm, std::abs(v));
  }
  if (norm > 0.0)
    for (double& v : x) v /= norm;
  return x;
}

// M distinct ascending positions from {0..range-1} via partial Fisher-Yates.
std::vector<long> sample_positions(Rng& rng, long range, int m) {
  std::vector<long> pool(static_cast<size_t>(range));
  std::iota(pool.begin(), pool.end(), 0L);
  for (int i = 0; i < m; ++i) {
    const long j = i + static_cast<long>(rng.below(static_cast<uint64_t>(range - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
  }
  std::vector<long> pos(pool.begin(), pool.begin() + m);
  std::sort(pos.begin(), pos.end());
  return pos;
}

// Random orthonormal matrix: QR of a Gaussian matrix with the R diagonal
// sign-fixed so the distribution does not depend on the QR implementation's
// sign conventions.
Eigen::MatrixXd sample_orthonormal(Rng& rng, int n) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

TaskId parse_task(const std::string& name) {
  if (name == "shift") return TaskId::Shift;
  if (name == "cumsum") return TaskId::CumSum;
  if (name == "cummax") return TaskId::CumMax;
  if (name == "reverse") return TaskId::Reverse;
  if (name == "sort") return TaskId::Sort;
  if (name == "select") return TaskId::Select;
  if (name == "select-fixed") return TaskId::SelectFixed;
  if (name == "mips") return TaskId::MIPS;
  if (name == "context-shift") return TaskId::ContextShift;
  if (name == "solve") return TaskId::Solve;
  if (name == "solve-fixed") return TaskId::SolveFixed;
  throw std::invalid_argument("unknown task: " + name);
}

std::string task_name(TaskId task) {
  switch (task) {
    case TaskId::Shift: return "shift";
    case TaskId::CumSum: return "cumsum";
    case TaskId::CumMax: return "cummax";
    case TaskId::Reverse: return "reverse";
    case TaskId::Sort: return "sort";
    case TaskId::Select: return "select";
    case TaskId::SelectFixed: return "select-fixed";
    case TaskId::MIPS: return "mips";
    case TaskId::ContextShift: return "context-shift";
    case TaskId::Solve: return "solve";
    case TaskId::SolveFixed: return "solve-fixed";
  }
  return "?";
}

int solve_state_size(long L) {
  int n = 0;
  while (L - static_cast<long>(n + 1) * (n + 1) - (n + 1) >= (n + 1)) ++n;
  return n;
}

TaskShapes task_shapes(const TaskSpec& spec) {
  TaskShapes s;
  const long L = spec.L;
  switch (spec.task) {
    case TaskId::Shift:
      s = {L, 1, 3, L, spec.shift_count};
      break;
    case TaskId::CumSum:
    case TaskId::CumMax:
      s = {L, 1, 3, L, 1};
      break;
    case TaskId::Reverse:
    case TaskId::Sort:
      s = {2 * L, 1, 3, L, 1};
      break;
    case TaskId::Select:
    case TaskId::SelectFixed:
      s = {L + 2L * spec.select_count, 2, 4, spec.select_count, 1};
      break;
    case TaskId::MIPS:
      s = {L, 3 * spec.mips_dim, 3 * spec.mips_dim + 2, L, spec.mips_dim};
      break;
    case TaskId::ContextShift:
      s = {L, 1, 3, L, 1};
      break;
    case TaskId::Solve:
    case TaskId::SolveFixed:
      s = {L, 1, 3, solve_state_size(L), 1};
      break;
  }
  return s;
}

void gen_sample(const TaskSpec& spec, uint64_t index, Tensor& x_task, Tensor& y) {
  const TaskShapes shapes = task_shapes(spec);
  const long L = spec.L;
  Rng rng(mix_seed(spec.seed, index, 0x5a3f));
  x_task = Tensor({shapes.T, static_cast<long>(shapes.d_task)});
  y = Tensor({shapes.out_len, static_cast<long>(shapes.d_out)});

  switch (spec.task) {
    case TaskId::Shift: {
      const int C = spec.shift_count;
      if (C <= 0 || L % C != 0) throw std::invalid_argument("shift count must divide L");
      auto x = sample_normalized(rng, L);
      for (long i = 0; i < L; ++i) x_task.at(i, 0) = x[static_cast<size_t>(i)];
      for (long i = 0; i < L; ++i)
        for (int j = 0; j < C; ++j) {
          const long src = i - static_cast<long>(j) * (L / C);
          y.at(i, j) = src >= 0 ? x[static_cast<size_t>(src)] : 0.0;
        }
      break;
    }
    case TaskId::CumSum: {
      auto x = sample_normalized(rng, L);
      double acc = 0.0;
      for (long i = 0; i < L; ++i) {
        x_task.at(i, 0) = x[static_cast<size_t>(i)];
        acc += x[static_cast<size_t>(i)];
        y.at(i, 0) = acc / std::sqrt(static_cast<double>(i + 1));
      }
      break;
    }
    case TaskId::CumMax: {
      auto x = sample_normalized(rng, L);
      double best = -std::numeric_limits<double>::infinity();
      for (long i = 0; i < L; ++i) {
        x_task.at(i, 0) = x[static_cast<size_t>(i)];
        best = std::max(best, x[static_cast<size_t>(i)]);
        y.at(i, 0) = best;
      }
      break;
    }
    case TaskId::Reverse: {
      auto x = sample_normalized(rng, L);
      for (long i = 0; i < L; ++i) x_task.at(i, 0) = x[static_cast<size_t>(i)];
      for (long i = 0; i < L; ++i) y.at(i, 0) = x[static_cast<size_t>(L - 1 - i)];
      break;
    }
    case TaskId::Sort: {
      auto x = sample_normalized(rng, L);
      for (long i = 0; i < L; ++i) x_task.at(i, 0) = x[static_cast<size_t>(i)];
      std::vector<long> order(static_cast<size_t>(L));
      std::iota(order.begin(), order.end(), 0L);
      std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
        return std::abs(x[static_cast<size_t>(a)] - x[0]) <
               std::abs(x[static_cast<size_t>(b)] - x[0]);
      });
      for (long i = 0; i < L; ++i) y.at(i, 0) = x[static_cast<size_t>(order[static_cast<size_t>(i)])];
      break;
    }
    case TaskId::Select:
    case TaskId::SelectFixed: {
      const int M = spec.select_count;
      if (M >= L) throw std::invalid_argument("select count must be < L");
      std::vector<long> pos;
      if (spec.task == TaskId::SelectFixed) {
        Rng fixed(mix_seed(spec.fixed_seed, 0xf15e));
        pos = sample_positions(fixed, L + M, M);
      } else {
        pos = sample_positions(rng, L + M, M);
      }
      auto x = sample_normalized(rng, L + M);
      for (long i = 0; i < L + M; ++i) x_task.at(i, 0) = x[static_cast<size_t>(i)];
      for (long p : pos) x_task.at(p, 1) = 1.0;
      for (int j = 0; j < M; ++j) y.at(j, 0) = x[static_cast<size_t>(pos[static_cast<size_t>(j)])];
      break;
    }
    case TaskId::MIPS: {
      const int D = spec.mips_dim;
      auto draw_unit = [&rng, D](double* dst) {
        double norm = 0.0;
        for (int d = 0; d < D; ++d) {
          dst[d] = rng.normal();
          norm += dst[d] * dst[d];
        }
        norm = std::sqrt(norm);
        if (norm > 0.0)
          for (int d = 0; d < D; ++d) dst[d] /= norm;
      };
      std::vector<double> q(static_cast<size_t>(L) * D), k(static_cast<size_t>(L) * D),
          v(static_cast<size_t>(L) * D);
      for (long i = 0; i < L; ++i) {
        draw_unit(&q[static_cast<size_t>(i) * D]);
        draw_unit(&k[static_cast<size_t>(i) * D]);
        draw_unit(&v[static_cast<size_t>(i) * D]);
      }
      for (long i = 0; i < L; ++i)
        for (int d = 0; d < D; ++d) {
          x_task.at(i, d) = q[static_cast<size_t>(i) * D + d];
          x_task.at(i, D + d) = k[static_cast<size_t>(i) * D + d];
          x_task.at(i, 2 * D + d) = v[static_cast<size_t>(i) * D + d];
        }
      for (long i = 0; i < L; ++i) {
        long best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (long j = 0; j <= i; ++j) {
          double s = 0.0;
          for (int d = 0; d < D; ++d)
            s += q[static_cast<size_t>(i) * D + d] * k[static_cast<size_t>(j) * D + d];
          if (s > best_score) {
            best_score = s;
            best = j;
          }
        }
        for (int d = 0; d < D; ++d) y.at(i, d) = v[static_cast<size_t>(best) * D + d];
      }
      break;
    }
    case TaskId::ContextShift: {
      if (L < 3) throw std::invalid_argument("context-shift needs L >= 3");
      const long s = static_cast<long>(rng.below(static_cast<uint64_t>(L - 1)));  // 0..L-2
      auto x = sample_normalized(rng, L - 2);
      std::vector<double> xp(static_cast<size_t>(L));
      xp[0] = std::cos(kTwoPi * static_cast<double>(s) / static_cast<double>(L));
      xp[1] = std::sin(kTwoPi * static_cast<double>(s) / static_cast<double>(L));
      for (long i = 0; i < L - 2; ++i) xp[static_cast<size_t>(i + 2)] = x[static_cast<size_t>(i)];
      for (long i = 0; i < L; ++i) x_task.at(i, 0) = xp[static_cast<size_t>(i)];
      for (long i = 0; i < L; ++i)
        y.at(i, 0) = i - s >= 0 ? xp[static_cast<size_t>(i - s)] : 0.0;
      break;
    }
    case TaskId::Solve:
    case TaskId::SolveFixed: {
      const int N = solve_state_size(L);
      if (N < 1) throw std::invalid_argument("solve needs L >= 3");
      Eigen::MatrixXd A;
      if (spec.task == TaskId::SolveFixed) {
        Rng fixed(mix_seed(spec.fixed_seed, 0xa0));
        A = sample_orthonormal(fixed, N);
      } else {
        A = sample_orthonormal(rng, N);
      }
      Eigen::VectorXd X(N);
      for (int i = 0; i < N; ++i) X(i) = rng.normal();
      X.normalize();
      Eigen::VectorXd B = A * X;
      long pos = 0;
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) x_task.at(pos++, 0) = A(i, j);
        x_task.at(pos++, 0) = B(i);
      }
      for (int i = 0; i < N; ++i) y.at(i, 0) = X(i);
      break;
    }
  }
}

TaskBatch make_batch(const TaskSpec& spec, int B, uint64_t first_index) {
  const TaskShapes shapes = task_shapes(spec);
  Tensor x({static_cast<long>(B), shapes.T, static_cast<long>(shapes.d_task)});
  Tensor y({static_cast<long>(B), shapes.out_len, static_cast<long>(shapes.d_out)});
  for (int b = 0; b < B; ++b) {
    Tensor xs, ys;
    gen_sample(spec, first_index + static_cast<uint64_t>(b), xs, ys);
    std::copy(xs.v.begin(), xs.v.end(), x.v.begin() + static_cast<long>(b) * xs.numel());
    std::copy(ys.v.begin(), ys.v.end(), y.v.begin() + static_cast<long>(b) * ys.numel());
  }
  TaskBatch batch;
  batch.x = augment_positional(x);
  batch.y = std::move(y);
  return batch;
}

}  // namespace dlr
