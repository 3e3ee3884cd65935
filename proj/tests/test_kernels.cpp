#include <doctest.h>

#include <cstring>
#include <tuple>
#include <vector>

#include "fadi/kernels.hpp"
#include "helpers.hpp"

using namespace fadi;
using kernels::ConstView;
using kernels::Isa;

namespace {

Matrix reference_product(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k)
      for (Index j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

ConstView view(const Matrix& a) {
  return {a.data(), std::size_t(a.rows()), std::size_t(a.cols()), std::ptrdiff_t(a.cols()), 1};
}

std::vector<Isa> variants() {
  std::vector<Isa> v;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512})
    if (kernels::isa_available(isa)) v.push_back(isa);
  return v;
}

}  // namespace

TEST_CASE("scalar gemm matches the triple loop") {
  const Matrix a = test::random_matrix(7, 5, 1), b = test::random_matrix(5, 9, 2);
  Matrix c(7, 9);
  kernels::gemm(Isa::Scalar, view(a), view(b), c.data(), 9, 1.0, 0.0);
  CHECK(test::rel_diff(c, reference_product(a, b)) < 1e-14);
}

TEST_CASE("gemm variants agree across shapes, strides and scalings") {
  const std::vector<std::tuple<Index, Index, Index>> shapes{
      {1, 1, 1}, {3, 2, 5}, {6, 8, 8}, {13, 17, 11}, {37, 64, 29}, {100, 300, 24},
      {257, 97, 50}, {8, 2500, 3}, {500, 40, 12}};
  for (auto [m, k, n] : shapes) {
    CAPTURE(m);
    CAPTURE(k);
    CAPTURE(n);
    const Matrix a = test::random_matrix(m, k, std::uint64_t(m * 131 + k));
    const Matrix b = test::random_matrix(k, n, std::uint64_t(n * 7 + k));
    const Matrix at = a.transpose();  // stored k x m, read through a transposed view
    const Matrix c0 = test::random_matrix(m, n, 99);
    const Matrix ref = 0.5 * reference_product(a, b) - 2.0 * c0;
    for (Isa isa : variants()) {
      CAPTURE(kernels::isa_name(isa));
      Matrix c = c0;
      kernels::gemm(isa, view(a), view(b), c.data(), std::size_t(n), 0.5, -2.0);
      CHECK(test::rel_diff(c, ref) < 1e-13);
      Matrix ct = c0;
      kernels::gemm(isa, view(at).transposed(), view(b), ct.data(), std::size_t(n), 0.5, -2.0);
      CHECK(test::rel_diff(ct, ref) < 1e-13);
      Matrix cz(m, n);
      cz.setConstant(std::numeric_limits<double>::quiet_NaN());  // beta = 0 must not read C
      kernels::gemm(isa, view(a), view(b), cz.data(), std::size_t(n), 1.0, 0.0);
      CHECK(test::rel_diff(cz, reference_product(a, b)) < 1e-13);
    }
  }
}

TEST_CASE("gemm writes into a strided destination") {
  const Matrix a = test::random_matrix(9, 6, 3), b = test::random_matrix(6, 4, 4);
  for (Isa isa : variants()) {
    Matrix big = Matrix::Constant(9, 10, 7.0);
    kernels::gemm(isa, view(a), view(b), big.data() + 3, 10, 1.0, 0.0);
    CHECK(test::rel_diff(big.middleCols(3, 4), reference_product(a, b)) < 1e-13);
    CHECK(big.leftCols(3).isConstant(7.0));
    CHECK(big.rightCols(3).isConstant(7.0));
  }
}

TEST_CASE("each column of a product is independent of how columns are batched") {
  const Matrix a = test::random_matrix(300, 200, 5), b = test::random_matrix(200, 60, 6);
  for (Isa isa : variants()) {
    CAPTURE(kernels::isa_name(isa));
    Matrix whole(300, 60);
    kernels::gemm(isa, view(a), view(b), whole.data(), 60, 1.0, 0.0);
    for (Index w : {Index(1), Index(12), Index(25)}) {
      for (Index c0 = 0; c0 < 60; c0 += w) {
        const Index cols = std::min(w, Index(60) - c0);
        const Matrix part = b.middleCols(c0, cols);
        Matrix out(300, cols);
        kernels::gemm(isa, view(a), view(part), out.data(), std::size_t(cols), 1.0, 0.0);
        CHECK(std::memcmp(out.data(), Matrix(whole.middleCols(c0, cols)).data(),
                          sizeof(double) * std::size_t(out.size())) == 0);
      }
    }
  }
}

TEST_CASE("axpy and dot variants agree with the scalar reference") {
  for (std::size_t n : {0, 1, 3, 7, 8, 15, 16, 33, 1000, 4099}) {
    CAPTURE(n);
    const Matrix x = test::random_matrix(1, Index(n), n + 1), y0 = test::random_matrix(1, Index(n), n + 2);
    Matrix yref = y0;
    kernels::axpy(Isa::Scalar, n, -1.25, x.data(), yref.data());
    const double dref = kernels::dot(Isa::Scalar, n, x.data(), y0.data());
    for (Isa isa : variants()) {
      Matrix y = y0;
      kernels::axpy(isa, n, -1.25, x.data(), y.data());
      CHECK((n == 0 || (y - yref).cwiseAbs().maxCoeff() <= 1e-14));
      CHECK(kernels::dot(isa, n, x.data(), y0.data()) ==
            doctest::Approx(dref).epsilon(1e-13));
    }
  }
}

TEST_CASE("requests above the detected variant are clamped") {
  const Isa before = kernels::active_isa();
  kernels::set_active_isa(Isa::Avx512);
  CHECK(static_cast<int>(kernels::active_isa()) <= static_cast<int>(kernels::detected_isa()));
  kernels::set_active_isa(Isa::Scalar);
  CHECK(kernels::active_isa() == Isa::Scalar);
  kernels::set_active_isa(before);
  CHECK(kernels::isa_available(Isa::Scalar));
  CHECK(kernels::isa_name(Isa::Avx2) == "avx2");
}
