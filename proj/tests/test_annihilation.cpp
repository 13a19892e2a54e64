#include "test_util.hpp"

#include <omodl/annihilation.hpp>
#include <omodl/synth.hpp>

#include <gtest/gtest.h>

using namespace omodl;
using testutil::random_grid;

namespace {

ComplexGrid delta(int rows, int cols, int r, int c) {
  ComplexGrid h(rows, cols);
  h(r, c) = 1.0;
  return h;
}

ComplexGrid crop(ComplexGrid const &g, int r0, int c0, int rows, int cols) {
  ComplexGrid out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = g(r0 + i, c0 + j);
  return out;
}

/// Dense matrix of g -> lift_convolve(h, g), built column by column from unit grids.
detail::CMatrix dense_lift(ComplexGrid const &h, int rows, int cols) {
  int const vr = rows - h.rows() + 1, vc = cols - h.cols() + 1;
  detail::CMatrix m(vr * vc, rows * cols);
  for (int j = 0; j < rows * cols; ++j) {
    ComplexGrid e(rows, cols);
    e[j] = 1.0;
    auto col = lift_convolve(h, e);
    for (int i = 0; i < vr * vc; ++i) m(i, j) = col[i];
  }
  return m;
}

AnnihilationFilterBank random_bank(int k, int grid, int count, std::uint64_t seed) {
  std::vector<ComplexGrid> fs;
  for (int j = 0; j < count; ++j) fs.push_back(random_grid(k, k, seed + j));
  return {FilterSupport(k, k, grid, grid), std::move(fs)};
}

} // namespace

TEST(FilterSupportType, Validation) {
  EXPECT_THROW(FilterSupport(4, 3, 8, 8), ConfigError);
  EXPECT_THROW(FilterSupport(9, 3, 8, 8), DimensionError);
  FilterSupport s(3, 5, 8, 10);
  EXPECT_EQ(s.valid_rows(), 6);
  EXPECT_EQ(s.valid_cols(), 6);
  EXPECT_EQ(s.dim(), 15);
}

TEST(LiftConvolve, CenteredDeltaCrops) {
  auto g = random_grid(8, 8, 1);
  EXPECT_TRUE(lift_convolve(delta(3, 3, 1, 1), g) == crop(g, 1, 1, 6, 6));
}

TEST(LiftConvolve, ShiftedDeltaShiftsCrop) {
  auto g = random_grid(8, 8, 2);
  EXPECT_TRUE(lift_convolve(delta(3, 3, 0, 2), g) == crop(g, 2, 0, 6, 6));
  EXPECT_TRUE(lift_convolve(delta(3, 3, 2, 0), g) == crop(g, 0, 2, 6, 6));
}

TEST(LiftConvolve, MatchesBruteForce) {
  auto h = random_grid(3, 3, 3);
  auto g = random_grid(8, 8, 4);
  auto out = lift_convolve(h, g);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      cplx s = 0.0;
      // out(i,j) = sum over grid points p in the window of h(i+2-p_r, j+2-p_c) g(p)
      for (int pr = i; pr < i + 3; ++pr)
        for (int pc = j; pc < j + 3; ++pc) s += h(i + 2 - pr, j + 2 - pc) * g(pr, pc);
      EXPECT_NEAR(std::abs(out(i, j) - s), 0.0, 1e-13);
    }
  }
}

TEST(LiftConvolve, FilterLargerThanGridThrows) { EXPECT_THROW(lift_convolve(random_grid(9, 3, 1), random_grid(8, 8, 1)), DimensionError); }

TEST(LiftAdjoint, DotProductTest) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto h = random_grid(5, 3, 10 + s);
    auto g = random_grid(12, 12, 40 + s);
    auto v = random_grid(8, 10, 70 + s);
    cplx const lhs = inner(lift_convolve(h, g), v);
    cplx const rhs = inner(g, lift_adjoint(h, v));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
  }
}

TEST(LiftAdjoint, CenteredDeltaReembeds) {
  auto v = random_grid(6, 6, 5);
  auto out = lift_adjoint(delta(3, 3, 1, 1), v);
  ASSERT_EQ(out.rows(), 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      bool const inside = r >= 1 && r < 7 && c >= 1 && c < 7;
      EXPECT_EQ(out(r, c), inside ? v(r - 1, c - 1) : cplx(0.0));
    }
  }
  EXPECT_EQ(norm2(lift_adjoint(random_grid(3, 3, 1), ComplexGrid(6, 6))), 0.0);
}

TEST(StackedLift, CommutesWithFilterLift) {
  FilterSupport s(3, 5, 12, 12);
  auto grad = testutil::random_gradient(12, 12, 6);
  auto lift = stacked_lift(grad, s);
  for (std::uint64_t k = 0; k < 5; ++k) {
    auto h = random_grid(3, 5, 100 + k);
    auto pair = lift.apply(h);
    EXPECT_LE(testutil::rel_diff(pair.x, lift_convolve(h, grad.x)), 1e-13);
    EXPECT_LE(testutil::rel_diff(pair.y, lift_convolve(h, grad.y)), 1e-13);
  }
}

TEST(StackedLift, ZeroGradientGivesZeroMap) {
  FilterSupport s(3, 3, 8, 8);
  auto lift = stacked_lift(GradientKSpace(8, 8), s);
  auto pair = lift.apply(random_grid(3, 3, 1));
  EXPECT_EQ(norm2(pair.x) + norm2(pair.y), 0.0);
}

TEST(StackedLift, DenseMatchesHandle) {
  FilterSupport s(3, 3, 8, 8);
  auto lift = stacked_lift(testutil::random_gradient(8, 8, 7), s);
  auto m = lift.dense();
  for (std::uint64_t k = 0; k < 20; ++k) {
    auto h = random_grid(3, 3, 200 + k);
    auto pair = lift.apply(h);
    Eigen::Map<detail::CVector const> hv(h.storage().data(), 9);
    detail::CVector y = m * hv;
    for (int i = 0; i < 36; ++i) {
      EXPECT_NEAR(std::abs(y[i] - pair.x[i]), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(y[36 + i] - pair.y[i]), 0.0, 1e-12);
    }
  }
}

TEST(StackedLift, AdjointDotProduct) {
  FilterSupport s(5, 5, 16, 16);
  auto lift = stacked_lift(testutil::random_gradient(16, 16, 8), s);
  auto h = random_grid(5, 5, 9);
  LiftedPair v{random_grid(12, 12, 10), random_grid(12, 12, 11)};
  auto fwd = lift.apply(h);
  cplx const lhs = inner(fwd.x, v.x) + inner(fwd.y, v.y);
  cplx const rhs = inner(h, lift.apply_adjoint(v));
  EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
}

TEST(Gram, ZeroGradientGivesZero) {
  auto g = gram_assemble(GradientKSpace(10, 10), FilterSupport(3, 3, 10, 10));
  EXPECT_EQ(g.m.norm(), 0.0);
}

TEST(Gram, MatchesDenseProduct) {
  for (int f : {3, 5}) {
    FilterSupport s(f, f, 10, 10);
    auto grad = testutil::random_gradient(10, 10, 12 + f);
    auto m = stacked_lift(grad, s).dense();
    detail::CMatrix dense = m.adjoint() * m;
    auto g = gram_assemble(grad, s);
    EXPECT_LE((g.m - dense).norm(), 1e-10 * dense.norm());
  }
}

TEST(Gram, RectangularSupportMatchesDense) {
  FilterSupport s(3, 5, 12, 10);
  auto grad = GradientKSpace(random_grid(12, 10, 1), random_grid(12, 10, 2));
  auto m = stacked_lift(grad, s).dense();
  EXPECT_LE((gram_assemble(grad, s).m - m.adjoint() * m).norm(), 1e-10 * (m.adjoint() * m).norm());
}

TEST(Gram, HermitianPsd) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    auto g = gram_assemble(testutil::random_gradient(12, 12, 300 + k), FilterSupport(5, 5, 12, 12));
    EXPECT_LE((g.m - g.m.adjoint()).norm(), 1e-12 * g.m.norm());
    Eigen::SelfAdjointEigenSolver<detail::CMatrix> eig(g.m);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * g.m.norm());
  }
}

TEST(Gram, OracleFilterIsInNullSpace) {
  FilterSupport s(5, 5, 16, 16);
  auto oracle = build_annihilated_oracle(16, s, 3);
  auto g = gram_assemble(gradient_transform(oracle.f_hat, GradientWeights(16, 16)), s);
  Eigen::Map<detail::CVector const> h(oracle.h0.storage().data(), 25);
  double const q = std::real(h.dot(g.m * h));
  EXPECT_LE(std::abs(q), 1e-12 * g.m.norm() * h.squaredNorm());
}

TEST(FilterbankNormal, EmptyBankGivesZero) {
  AnnihilationFilterBank bank(FilterSupport(3, 3, 8, 8), {});
  auto out = filterbank_normal_apply(bank, testutil::random_gradient(8, 8, 1));
  EXPECT_EQ(norm2(out), 0.0);
}

TEST(FilterbankNormal, DeltaFilterCropsAndReembeds) {
  AnnihilationFilterBank bank(FilterSupport(3, 3, 8, 8), {delta(3, 3, 1, 1)});
  auto z = testutil::random_gradient(8, 8, 2);
  auto out = filterbank_normal_apply(bank, z);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      bool const inside = r >= 1 && r < 7 && c >= 1 && c < 7;
      EXPECT_NEAR(std::abs(out.x(r, c) - (inside ? z.x(r, c) : cplx(0.0))), 0.0, 1e-15);
      EXPECT_NEAR(std::abs(out.y(r, c) - (inside ? z.y(r, c) : cplx(0.0))), 0.0, 1e-15);
    }
  }
}

TEST(FilterbankNormal, MatchesDenseOperator) {
  auto bank = random_bank(3, 12, 4, 400);
  detail::CMatrix op = detail::CMatrix::Zero(144, 144);
  for (auto const &h : bank.filters) {
    auto m = dense_lift(h, 12, 12);
    op += m.adjoint() * m;
  }
  auto z = testutil::random_gradient(12, 12, 13);
  auto out = filterbank_normal_apply(bank, z);
  Eigen::Map<detail::CVector const> zx(z.x.storage().data(), 144), zy(z.y.storage().data(), 144);
  detail::CVector ex = op * zx, ey = op * zy;
  for (int i = 0; i < 144; ++i) {
    EXPECT_NEAR(std::abs(out.x[i] - ex[i]), 0.0, 1e-11 * ex.norm());
    EXPECT_NEAR(std::abs(out.y[i] - ey[i]), 0.0, 1e-11 * ey.norm());
  }
}

TEST(FilterbankNormal, SelfAdjointAndPsd) {
  auto bank = random_bank(5, 16, 3, 500);
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto z = testutil::random_gradient(16, 16, 600 + k);
    auto y = testutil::random_gradient(16, 16, 700 + k);
    cplx const a = inner(filterbank_normal_apply(bank, z), y);
    cplx const b = inner(z, filterbank_normal_apply(bank, y));
    EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(a));
    cplx const q = inner(z, filterbank_normal_apply(bank, z));
    EXPECT_LE(std::abs(q.imag()), 1e-12 * std::abs(q));
    EXPECT_GE(q.real(), -1e-12 * norm2(z) * norm2(z));
  }
}

TEST(FilterbankNormal, SupportMismatchThrows) {
  auto bank = random_bank(3, 12, 1, 1);
  EXPECT_THROW(filterbank_normal_apply(bank, testutil::random_gradient(10, 12, 1)), DimensionError);
}
