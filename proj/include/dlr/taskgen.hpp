#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlr/tensor.hpp"

namespace dlr {

enum class TaskId {
  Shift,
  CumSum,
  CumMax,
  Reverse,
  Sort,
  Select,
  SelectFixed,
  MIPS,
  ContextShift,
  Solve,
  SolveFixed,
};

TaskId parse_task(const std::string& name);  // throws on unknown name
std::string task_name(TaskId task);

struct TaskSpec {
  TaskId task = TaskId::CumSum;
  long L = 256;
  int shift_count = 8;    // C: number of uniformly spaced shifts
  int select_count = 32;  // M: selected positions
  int mips_dim = 4;       // D: query/key/value dimension
  uint64_t seed = 0;
  uint64_t fixed_seed = 1;  // instance seed for the *Fixed variants
};

struct TaskShapes {
  long T = 0;       // input length after task padding
  int d_task = 0;   // task channels before positional augmentation
  int d_in = 0;     // d_task + 2
  long out_len = 0; // rightmost positions forming the prediction
  int d_out = 0;
};

TaskShapes task_shapes(const TaskSpec& spec);

struct TaskBatch {
  Tensor x;  // B x T x d_in (positional channels appended)
  Tensor y;  // B x out_len x d_out
};

// Largest N with L - N^2 - N >= N (state size of the Solve task).
int solve_state_size(long L);

// Generates one sample deterministically from (spec.seed, index). x_task is
// T x d_task (no positional channels), y is out_len x d_out.
void gen_sample(const TaskSpec& spec, uint64_t index, Tensor& x_task, Tensor& y);

// Samples [first_index, first_index + B) stacked, positional channels added.
TaskBatch make_batch(const TaskSpec& spec, int B, uint64_t first_index);

}  // namespace dlr
