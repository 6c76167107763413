#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace qdnn {

template <class T, std::size_t Align>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{Align}); }

  template <class U>
  bool operator==(const AlignedAllocator<U, Align>&) const noexcept {
    return true;
  }
};

/// Row-major matrix of doubles whose rows start on 64-byte boundaries.
/// Columns past cols() up to stride() are padding and always hold zero.
class Matrix {
 public:
  static constexpr std::size_t kRowAlign = 8;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows),
        cols_(cols),
        stride_((cols + kRowAlign - 1) / kRowAlign * kRowAlign),
        data_(rows * stride_, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t stride() const noexcept { return stride_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * stride_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * stride_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * stride_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * stride_, cols_};
  }

  /// Whole backing store including padding.
  std::span<double> storage() noexcept { return data_; }
  std::span<const double> storage() const noexcept { return data_; }

  void fill(double v) noexcept {
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) (*this)(r, c) = v;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<double, AlignedAllocator<double, 64>> data_;
};

/// dst = src^T, reusing dst's storage when the shape already fits.
void transpose_into(const Matrix& src, Matrix& dst);

/// C = A * B over the active kernel variant. C is resized to A.rows() x B.cols().
void multiply(const Matrix& a, const Matrix& b, Matrix& c);

}  // namespace qdnn
