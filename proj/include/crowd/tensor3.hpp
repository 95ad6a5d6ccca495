#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace crowd {

/// Dense k x k x k tensor, row-major in (a, b, c).
template <typename Scalar>
class Tensor3 {
 public:
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor3() = default;
  explicit Tensor3(Eigen::Index k) : k_(k), data_(static_cast<std::size_t>(k * k * k), Scalar(0)) {}

  Eigen::Index dim() const noexcept { return k_; }

  Scalar& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    return data_[static_cast<std::size_t>((a * k_ + b) * k_ + c)];
  }
  Scalar operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    return data_[static_cast<std::size_t>((a * k_ + b) * k_ + c)];
  }

  /// Adds scale * x (x) y (x) z.
  template <typename DX, typename DY, typename DZ>
  void add_outer(Scalar scale, const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                 const Eigen::MatrixBase<DZ>& z) {
    for (Eigen::Index a = 0; a < k_; ++a) {
      const Scalar xa = scale * x(a);
      if (xa == Scalar(0)) continue;
      for (Eigen::Index b = 0; b < k_; ++b) {
        const Scalar xab = xa * y(b);
        if (xab == Scalar(0)) continue;
        for (Eigen::Index c = 0; c < k_; ++c) (*this)(a, b, c) += xab * z(c);
      }
    }
  }

  /// Result(x, y, z) = sum_{a,b,c} A(x,a) B(y,b) C(z,c) T(a,b,c).
  Tensor3 multilinear(const MatrixType& A, const MatrixType& B, const MatrixType& C) const {
    const Eigen::Index k = k_;
    // contract one mode at a time
    Tensor3 t1(k), t2(k), out(k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        for (Eigen::Index z = 0; z < k; ++z) {
          Scalar s = 0;
          for (Eigen::Index c = 0; c < k; ++c) s += C(z, c) * (*this)(a, b, c);
          t1(a, b, z) = s;
        }
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index y = 0; y < k; ++y)
        for (Eigen::Index z = 0; z < k; ++z) {
          Scalar s = 0;
          for (Eigen::Index b = 0; b < k; ++b) s += B(y, b) * t1(a, b, z);
          t2(a, y, z) = s;
        }
    for (Eigen::Index x = 0; x < k; ++x)
      for (Eigen::Index y = 0; y < k; ++y)
        for (Eigen::Index z = 0; z < k; ++z) {
          Scalar s = 0;
          for (Eigen::Index a = 0; a < k; ++a) s += A(x, a) * t2(a, y, z);
          out(x, y, z) = s;
        }
    return out;
  }

  /// T(I, v, v): contracts the second and third modes with v.
  VectorType contract_pair(const VectorType& v) const {
    VectorType out = VectorType::Zero(k_);
    for (Eigen::Index a = 0; a < k_; ++a) {
      Scalar s = 0;
      for (Eigen::Index b = 0; b < k_; ++b)
        for (Eigen::Index c = 0; c < k_; ++c) s += (*this)(a, b, c) * v(b) * v(c);
      out(a) = s;
    }
    return out;
  }

  /// T(v, v, v).
  Scalar cubic_form(const VectorType& v) const { return v.dot(contract_pair(v)); }

  Scalar norm() const {
    Scalar s = 0;
    for (Scalar x : data_) s += x * x;
    return std::sqrt(s);
  }

  Tensor3& operator*=(Scalar s) {
    for (Scalar& x : data_) x *= s;
    return *this;
  }

 private:
  Eigen::Index k_ = 0;
  std::vector<Scalar> data_;
};

}  // namespace crowd
