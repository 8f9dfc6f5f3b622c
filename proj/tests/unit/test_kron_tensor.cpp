#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "polyfilter/errors.hpp"
#include "polyfilter/kron_tensor.hpp"
#include "test_util.hpp"

using namespace polyfilter;
using testutil::max_abs;
using testutil::max_abs_diff;

TEST_CASE("kron_power small cases") {
    Eigen::VectorXd a(1);
    a << 2.0;
    CHECK(kron_power(a, 2).data(0) == 4.0);

    Eigen::VectorXd v(2);
    v << 1.0, 2.0;
    const auto k = kron_power(v, 2);
    REQUIRE(k.data.size() == 4);
    CHECK(k.data(0) == 1.0);
    CHECK(k.data(1) == 2.0);
    CHECK(k.data(2) == 2.0);
    CHECK(k.data(3) == 4.0);

    Eigen::VectorXd w(3);
    w << 0.5, -1.5, 3.0;
    CHECK(kron_power(w, 1).data == w);
    CHECK_THROWS_AS(kron_power(w, 0), InvalidArgument);
}

TEST_CASE("kron_power entries are products of components") {
    std::mt19937_64 rng(11);
    for (int m = 1; m <= 3; ++m)
        for (int J = 1; J <= 4; ++J) {
            const Eigen::VectorXd v = testutil::random_matrix(m, 1, rng);
            const auto k = kron_power(v, J);
            REQUIRE(k.data.size() == ipow(m, J));
            CHECK(k.base_dim == m);
            CHECK(k.order == J);
            std::vector<int> idx(J, 0);
            for (Eigen::Index flat = 0; flat < k.data.size(); ++flat) {
                double prod = 1.0;
                for (int i : idx) prod *= v(i);
                CHECK(k.at(idx) == doctest::Approx(prod).epsilon(1e-14));
                // lexicographic increment
                for (int p = J - 1; p >= 0; --p) {
                    if (++idx[p] < m) break;
                    idx[p] = 0;
                }
            }
        }
}

TEST_CASE("kron matches kron_power for vectors") {
    std::mt19937_64 rng(3);
    const Eigen::VectorXd a = testutil::random_matrix(3, 1, rng);
    const Eigen::VectorXd b = testutil::random_matrix(2, 1, rng);
    const Eigen::MatrixXd ab = kron(a, b);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) CHECK(ab(i * 2 + j, 0) == a(i) * b(j));
    CHECK(max_abs_diff(kron(a, a), kron_power(a, 2).data) == 0.0);
}

TEST_CASE("vec and mat") {
    Eigen::MatrixXd M(2, 2);
    M << 1, 2, 3, 4;
    Eigen::VectorXd expected(4);
    expected << 1, 3, 2, 4;
    CHECK(vec(M) == expected);
    CHECK(mat(expected, 2, 2) == M);

    Eigen::MatrixXd c(1, 1);
    c << 7.5;
    CHECK(vec(c)(0) == 7.5);
    CHECK(mat(vec(c), 1, 1)(0, 0) == 7.5);

    std::mt19937_64 rng(5);
    const Eigen::VectorXd v6 = testutil::random_matrix(6, 1, rng);
    CHECK(vec(mat(v6, 2, 3)) == v6);
    const Eigen::MatrixXd M23 = testutil::random_matrix(2, 3, rng);
    CHECK(mat(vec(M23), 2, 3) == M23);
    CHECK_THROWS_AS(mat(v6, 4, 2), DimensionMismatch);
}

TEST_CASE("vec of an outer product is a Kronecker product") {
    std::mt19937_64 rng(8);
    const Eigen::VectorXd a = testutil::random_matrix(2, 1, rng);
    const Eigen::VectorXd b = testutil::random_matrix(2, 1, rng);
    // column-major: vec(b a^T) == a (x) b
    const Eigen::MatrixXd outer = b * a.transpose();
    CHECK(max_abs_diff(vec(outer), kron(a, b)) <= 1e-15);
    CHECK(max_abs_diff(vec(Eigen::MatrixXd(a * a.transpose())), kron_power(a, 2).data) <= 1e-15);
}

TEST_CASE("dedup_map counts and multiplicities") {
    const DedupMap d22 = dedup_map(2, 2);
    CHECK(d22.unique_count == 3);
    // slots: 00, 01, 10, 11
    CHECK(d22.forward[1] == d22.forward[2]);
    CHECK(d22.multiplicity[d22.forward[0]] == 1);
    CHECK(d22.multiplicity[d22.forward[1]] == 2);
    CHECK(d22.multiplicity[d22.forward[3]] == 1);

    for (int J = 1; J <= 5; ++J) {
        const DedupMap d = dedup_map(1, J);
        CHECK(d.unique_count == 1);
        CHECK(d.multiplicity[0] == 1);
    }
    CHECK(dedup_map(3, 2).unique_count == 6);

    for (int m = 1; m <= 4; ++m)
        for (int J = 1; J <= 4; ++J) {
            const DedupMap d = dedup_map(m, J);
            CHECK(d.unique_count == binomial(m + J - 1, J));
            CHECK(d.slot_count() == ipow(m, J));
            int total = 0;
            for (int c : d.multiplicity) total += c;
            CHECK(total == ipow(m, J));
            // Sorting a multi-index gives the same id as the original.
            std::vector<int> idx(J);
            for (int s = 0; s < d.slot_count(); ++s) {
                int r = s;
                for (int p = J - 1; p >= 0; --p) {
                    idx[p] = r % m;
                    r /= m;
                }
                std::vector<int> sorted = idx;
                std::sort(sorted.begin(), sorted.end());
                int flat = 0;
                for (int i : sorted) flat = flat * m + i;
                CHECK(d.forward[s] == d.forward[flat]);
            }
            std::set<int> reps(d.representative.begin(), d.representative.end());
            CHECK(static_cast<int>(reps.size()) == d.unique_count);
        }
}

TEST_CASE("dedup reconstruction of a symmetric tensor is lossless") {
    std::mt19937_64 rng(21);
    for (int m = 1; m <= 3; ++m)
        for (int J = 1; J <= 4; ++J) {
            const Eigen::VectorXd v = testutil::random_matrix(m, 1, rng);
            const Eigen::VectorXd full = kron_power(v, J).data;
            const DedupMap d = dedup_map(m, J);
            CHECK(max_abs_diff(d.expand(d.compress(full)), full) <= 4e-16 * max_abs(full));
        }
}

TEST_CASE("spd_factor") {
    const Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
    CHECK(spd_factor(I3) == I3);

    Eigen::MatrixXd four(1, 1);
    four << 4.0;
    CHECK(spd_factor(four)(0, 0) == 2.0);

    std::mt19937_64 rng(17);
    const Eigen::MatrixXd A = testutil::random_matrix(5, 5, rng);
    const Eigen::MatrixXd P = A * A.transpose();
    const Eigen::MatrixXd C = spd_factor(P);
    CHECK(max_abs_diff(C * C.transpose(), P) <= 1e-10 * std::max(1.0, testutil::max_abs(P)));

    Eigen::VectorXd diag(4);
    diag << 1.0, 4.0, 9.0, 0.25;
    const Eigen::MatrixXd D = spd_factor(Eigen::MatrixXd(diag.asDiagonal()));
    CHECK(max_abs_diff(D, Eigen::MatrixXd(diag.cwiseSqrt().asDiagonal())) == 0.0);

    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 3);
    Z(0, 0) = 2.0;
    const Eigen::MatrixXd Cz = spd_factor(Z);
    CHECK(Cz.row(1).isZero(0.0));
    CHECK(Cz.col(2).isZero(0.0));

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS(spd_factor(bad), IndefiniteMatrix);
}

TEST_CASE("enforce_psd lifts tiny negative eigenvalues only") {
    Eigen::MatrixXd P(2, 2);
    P << 1.0, 1.0, 1.0, 1.0 - 1e-14;
    const Eigen::MatrixXd Q = enforce_psd(P);
    CHECK(Q.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() >= 0.0);
    CHECK(max_abs_diff(Q, P) <= 1e-8);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(1, 1) = -0.5;
    CHECK_THROWS_AS(enforce_psd(bad), IndefiniteMatrix);
}
