#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace misgen::num {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

// Dense tensor: shape plus flat row-major storage. Scalar is float in
// training and double in oracle/test mode.
template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
    data.assign(numel_of(shape), S(0));
  }
  Tensor(std::vector<int> shp, std::vector<S> d) : shape(std::move(shp)), data(std::move(d)) {
    if (static_cast<size_t>(numel_of(shape)) != data.size())
      throw std::invalid_argument("Tensor: shape/data size mismatch");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  Eigen::Map<ArrX<S>> array() { return {data.data(), numel()}; }
  Eigen::Map<const ArrX<S>> array() const { return {data.data(), numel()}; }

  // 2-D view with explicit dimensions (column-major map over flat data).
  Eigen::Map<MatX<S>> mat(int rows, int cols) {
    check_view(rows, cols);
    return {data.data(), rows, cols};
  }
  Eigen::Map<const MatX<S>> mat(int rows, int cols) const {
    check_view(rows, cols);
    return {data.data(), rows, cols};
  }

  bool all_finite() const { return array().isFinite().all(); }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape);
    for (int64_t i = 0; i < numel(); ++i) out.data[static_cast<size_t>(i)] = static_cast<T>(data[static_cast<size_t>(i)]);
    return out;
  }

 private:
  void check_view(int rows, int cols) const {
    if (static_cast<int64_t>(rows) * cols != numel())
      throw std::invalid_argument("Tensor: bad 2-D view " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " of " + shape_str());
  }
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape error: " + what);
}

}  // namespace misgen::num
