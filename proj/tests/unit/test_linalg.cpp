#include <gtest/gtest.h>

#include <cmath>

#include "uniformity/linalg.hpp"
#include "uniformity/parallel.hpp"
#include "uniformity/rng.hpp"

using namespace uniformity;

TEST(Linalg, JacobiMatchesClosedForm2x2) {
    Matrix a(2, 2);
    a(0, 0) = 2.0;
    a(0, 1) = a(1, 0) = 1.0;
    a(1, 1) = 3.0;
    const auto eig = jacobi_eigen(a);
    const double tr = 5.0, det = 5.0;
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    EXPECT_NEAR(eig.values[0], tr / 2.0 + disc, 1e-13);
    EXPECT_NEAR(eig.values[1], tr / 2.0 - disc, 1e-13);
}

TEST(Linalg, JacobiReconstructsRandomSymmetric) {
    Rng rng(11);
    const std::size_t n = 6;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
    const auto eig = jacobi_eigen(a);
    for (std::size_t i = 1; i < n; ++i) EXPECT_GE(eig.values[i - 1], eig.values[i]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0, o = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
                o += eig.vectors(k, i) * eig.vectors(k, j);
            }
            EXPECT_NEAR(s, a(i, j), 1e-11);
            EXPECT_NEAR(o, i == j ? 1.0 : 0.0, 1e-11);
        }
}

TEST(Linalg, DeterminantAndGram) {
    Matrix a(3, 3);
    const double v[9] = {2, 0, 1, 1, 3, 2, 1, 1, 1};
    for (std::size_t i = 0; i < 9; ++i) a(i / 3, i % 3) = v[i];
    // cofactor expansion along the first row
    EXPECT_NEAR(determinant(a), 2 * (3 - 2) - 0 + 1 * (1 - 3), 1e-14);
    const Matrix g = gram_rows(a);
    EXPECT_DOUBLE_EQ(g(0, 1), 2 * 1 + 0 * 3 + 1 * 2);
    EXPECT_DOUBLE_EQ(g(2, 2), 3.0);
}

TEST(Linalg, SpectralNormOfDiagonal) {
    Matrix a(3, 3);
    a(0, 0) = 1.0;
    a(1, 1) = -4.0;
    a(2, 2) = 2.0;
    EXPECT_NEAR(spectral_norm(a), 4.0, 1e-9);
}

TEST(Rng, DeterministicAndInRange) {
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        EXPECT_EQ(u, b.uniform());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(a.uniform_index(7), 7u);
        b.uniform_index(7);
    }
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

TEST(Rng, NormalMoments) {
    Rng r(3);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 3) throw std::runtime_error("x");
                 }),
                 std::runtime_error);
}
