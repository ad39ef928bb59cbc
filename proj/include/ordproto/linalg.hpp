#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ordproto {

using Vector = std::vector<double>;

// Norms at or below this are treated as zero by cosine-based routines.
inline constexpr double kZeroNormEps = 1e-12;

// Row-major dense matrix. Rows are the natural unit: a batch of feature
// vectors is a matrix with one feature vector per row.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> v);
bool all_finite(std::span<const double> v) noexcept;

// u^T v / (|u| |v|). Throws ZeroVectorError when either norm <= kZeroNormEps,
// DimMismatchError when the lengths differ.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct CosineGrad {
  Vector wrt_u;
  Vector wrt_v;
};

// Partial derivatives of cosine_similarity(u, v):
//   d/du = v / (|u||v|) - cos(u, v) u / |u|^2, and symmetrically for v.
CosineGrad cosine_similarity_grad(std::span<const double> u, std::span<const double> v);

// Label-space similarity: -|a - b|.
double neg_abs_distance(double a, double b) noexcept;

// Max-subtracted softmax. Throws EmptyInputError on empty input.
Vector softmax(std::span<const double> v);

}  // namespace ordproto
