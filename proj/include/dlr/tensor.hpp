#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dlr {

// Dense row-major tensor of doubles. Rank is 3 or less everywhere in this
// project, so indexing helpers stop there.
struct Tensor {
  std::vector<long> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<long> s) : shape(std::move(s)), v(numel_of(shape), 0.0) {}
  Tensor(std::vector<long> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
    if (static_cast<long>(v.size()) != numel_of(shape))
      throw std::invalid_argument("tensor data does not match shape");
  }

  static long numel_of(const std::vector<long>& s) {
    long n = 1;
    for (long d : s) {
      if (d < 0) throw std::invalid_argument("negative tensor dimension");
      n *= d;
    }
    return n;
  }

  long numel() const { return static_cast<long>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  long dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double& at(long i) { return v[static_cast<size_t>(i)]; }
  double at(long i) const { return v[static_cast<size_t>(i)]; }
  double& at(long i, long j) { return v[static_cast<size_t>(i * shape[1] + j)]; }
  double at(long i, long j) const { return v[static_cast<size_t>(i * shape[1] + j)]; }
  double& at(long i, long j, long k) {
    return v[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  double at(long i, long j, long k) const {
    return v[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
};

inline std::string shape_str(const std::vector<long>& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

}  // namespace dlr
