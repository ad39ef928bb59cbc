#include "ordproto/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ordproto/errors.hpp"

namespace ordproto {

DenseMatrix DenseMatrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  DenseMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw DimMismatchError("from_rows: row " + std::to_string(r) + " has length " +
                             std::to_string(rows[r].size()) + ", expected " +
                             std::to_string(m.cols()));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

bool DenseMatrix::all_finite() const noexcept { return ordproto::all_finite(data_); }

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimMismatchError("matrix add: shape mismatch");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimMismatchError("dot: lengths " + std::to_string(u.size()) + " and " +
                           std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

struct CosineParts {
  double nu;
  double nv;
  double cos;
};

CosineParts cosine_parts(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimMismatchError("cosine_similarity: dims " + std::to_string(u.size()) + " and " +
                           std::to_string(v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu <= kZeroNormEps || nv <= kZeroNormEps) {
    throw ZeroVectorError("cosine_similarity: zero-norm argument");
  }
  return {nu, nv, dot(u, v) / (nu * nv)};
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  return cosine_parts(u, v).cos;
}

CosineGrad cosine_similarity_grad(std::span<const double> u, std::span<const double> v) {
  const auto [nu, nv, c] = cosine_parts(u, v);
  const double inv = 1.0 / (nu * nv);
  CosineGrad g{Vector(u.size()), Vector(v.size())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    g.wrt_u[i] = v[i] * inv - c * u[i] / (nu * nu);
    g.wrt_v[i] = u[i] * inv - c * v[i] / (nv * nv);
  }
  return g;
}

double neg_abs_distance(double a, double b) noexcept { return -std::abs(a - b); }

Vector softmax(std::span<const double> v) {
  if (v.empty()) throw EmptyInputError("softmax: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

}  // namespace ordproto
