#include <gtest/gtest.h>

#include "harnack/block_sym.hpp"

using namespace harnack;

TEST(BlockSym2n, ProjectsOntoSymmetricPart) {
  MatrixXd a(2, 2);
  a << 1.0, 2.0, 2.0 + 1e-14, 3.0;
  BlockSym2n b(a);
  EXPECT_EQ(asymmetry(b.matrix()), 0.0);
  EXPECT_NEAR(b(1, 0), 2.0, 1e-13);
}

TEST(BlockSym2n, RejectsAsymmetricAndOddShapes) {
  MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  EXPECT_THROW(BlockSym2n{a}, InvalidArgument);
  EXPECT_THROW(BlockSym2n{MatrixXd::Zero(3, 3)}, InvalidArgument);
  EXPECT_THROW(BlockSym2n{MatrixXd::Zero(2, 4)}, InvalidArgument);
}

TEST(BlockSym2n, BlockViews) {
  const auto b = BlockSym2n::scalar_blocks(2, -6, 3, -2);
  EXPECT_EQ(b.n(), 2);
  EXPECT_TRUE(b.xx().isApprox(-6 * MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(b.xv().isApprox(3 * MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(b.vx().isApprox(b.xv().transpose()));
  EXPECT_TRUE(b.vv().isApprox(-2 * MatrixXd::Identity(2, 2)));
}

TEST(StructuralPair, ExactEntries) {
  const auto cd1 = build_structural(1);
  MatrixXd C(2, 2), D(2, 2);
  C << 0, -1, 0, 0;
  D << 0, 0, 0, 2;
  EXPECT_EQ(cd1.C, C);
  EXPECT_EQ(cd1.D, D);
  const MatrixXd s = cd1.C + cd1.C.transpose();
  EXPECT_EQ(s(0, 0), 0.0);
  EXPECT_EQ(s(1, 1), 0.0);

  const auto cd2 = build_structural(2);
  MatrixXd C2 = MatrixXd::Zero(4, 4);
  C2.topRightCorner(2, 2) = -MatrixXd::Identity(2, 2);
  EXPECT_EQ(cd2.C, C2);
  EXPECT_THROW(build_structural(0), InvalidArgument);
}

TEST(CurvatureBound, PsdCheck) {
  EXPECT_NO_THROW(CurvatureBound(1, 0.0, 0.5));
  EXPECT_THROW(CurvatureBound(1, -0.1, 0.5), InvalidArgument);
  MatrixXd k(2, 2);
  k << 1, 2, 2, 1;  // eigenvalues 3, -1
  EXPECT_THROW(CurvatureBound{k}, InvalidArgument);
  k << 2, 1, 1, 2;
  const CurvatureBound kb(k);
  EXPECT_FALSE(kb.is_block_diagonal());
  EXPECT_TRUE(CurvatureBound(2, 1, 3).is_block_diagonal());
}
