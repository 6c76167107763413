#include "qdnn/dense.hpp"

#include "qdnn/error.hpp"
#include "qdnn/kernels.hpp"

namespace qdnn {

void transpose_into(const Matrix& src, Matrix& dst) {
  if (dst.rows() != src.cols() || dst.cols() != src.rows()) dst = Matrix(src.cols(), src.rows());
  for (std::size_t r = 0; r < src.rows(); ++r)
    for (std::size_t c = 0; c < src.cols(); ++c) dst(c, r) = src(r, c);
}

void multiply(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows()) throw Error(Errc::ShapeMismatch, "inner dimensions differ in A * B");
  if (c.rows() != a.rows() || c.cols() != b.cols()) c = Matrix(a.rows(), b.cols());
  kernels::gemm(a.rows(), b.cols(), a.cols(), a.data(), a.stride(), b.data(), b.stride(),
                c.data(), c.stride());
}

}  // namespace qdnn
