#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"
#include "weylscat/scattering.hpp"

using namespace weylscat;
using namespace testing;

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

// Herglotz-type value H + i P with P PSD of the given rank.
ComplexMatrix random_weyl_value(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng) {
    return random_hermitian(n, rng) + kI * random_psd(n, rank, rng);
}

ComplexMatrix random_dissipative(Eigen::Index n, std::mt19937_64& rng) {
    const ComplexMatrix b = random_matrix(n, n, rng);
    return random_hermitian(n, rng) - kI * (b.adjoint() * b + 0.1 * ComplexMatrix::Identity(n, n));
}

}  // namespace

TEST_CASE("scattering_matrix: M = i gives S = -1") {
    const ScatteringSample s = scattering_matrix(scalar(kI));
    CHECK(s.rank == 1);
    CHECK(std::abs(s.s(0, 0) + 1.0) < 1e-15);
    CHECK(s.unitarity_defect < 1e-15);
}

TEST_CASE("scattering_matrix: uniform model at lambda = 1/2") {
    const Complex m = std::log(1.0 / 3.0) + kI * kPi;
    const Complex expect = 1.0 - 2.0 * kI * kPi / m;  // scalar case: 1 - 2i Im m / m
    const ScatteringSample s = scattering_matrix(scalar(m));
    CHECK(std::abs(s.s(0, 0) - expect) < 1e-14);
    CHECK(s.s(0, 0).real() == doctest::Approx(-0.7821).epsilon(1e-4));
    CHECK(s.s(0, 0).imag() == doctest::Approx(0.6232).epsilon(1e-4));
}

TEST_CASE("scattering_matrix: real M has an empty fiber") {
    const ScatteringSample s = scattering_matrix(scalar(2.0));
    CHECK(s.rank == 0);
    CHECK(s.s.size() == 0);
    CHECK(s.unitarity_defect == 0.0);
    CHECK_FALSE(s.flagged());
    CHECK(scattering_matrix(ComplexMatrix::Zero(2, 2)).rank == 0);
}

TEST_CASE("scattering_matrix: diagonal M decouples channel by channel") {
    ComplexMatrix m = ComplexMatrix::Zero(3, 3);
    m(0, 0) = Complex(0.5, 2.0);
    m(1, 1) = -1.0;
    m(2, 2) = Complex(-3.0, 0.25);
    const ScatteringSample s = scattering_matrix(m);
    REQUIRE(s.rank == 2);
    // eigenvalues of S are the scalar S of the two dissipative channels
    Eigen::ComplexEigenSolver<ComplexMatrix> es(s.s);
    std::vector<Complex> got{es.eigenvalues()(0), es.eigenvalues()(1)};
    for (Complex mm : {m(0, 0), m(2, 2)}) {
        const Complex want = 1.0 - 2.0 * kI * mm.imag() / mm;
        double best = 1e9;
        for (Complex g : got) best = std::min(best, std::abs(g - want));
        CHECK(best < 1e-13);
    }
}

TEST_CASE("scattering_matrix errors") {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = kI;
    CHECK_CODE(scattering_matrix(m), ErrorCode::SingularWeylValue);
    CHECK_CODE(scattering_matrix(scalar(-kI)), ErrorCode::NotPSD);
    CHECK_CODE(scattering_matrix(ComplexMatrix::Zero(2, 1)), ErrorCode::NotSquare);
    CHECK_CODE(scattering_matrix(scalar(Complex(std::nan(""), 1.0))), ErrorCode::NonFinite);
}

TEST_CASE("scattering is unitary on the fiber for random Weyl values") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index n = 1 + trial % 5;
        const Eigen::Index r = 1 + trial % n;
        const ScatteringSample s = scattering_matrix(random_weyl_value(n, r, rng));
        CHECK(s.rank == r);
        CHECK(s.unitarity_defect < 1e-10);
        CHECK((s.fiber_basis.adjoint() * s.fiber_basis - ComplexMatrix::Identity(r, r)).norm() < 1e-12);
    }
}

TEST_CASE("fiber basis independence: S transforms by conjugation") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        const Eigen::Index r = 1 + trial % n;
        const ComplexMatrix m = random_weyl_value(n, r, rng);
        const ScatteringSample s = scattering_matrix(m);
        const ComplexMatrix u = random_unitary(r, rng);
        const ComplexMatrix s2 = scattering_on_basis(m, s.fiber_basis * u);
        CHECK((u * s2 * u.adjoint() - s.s).norm() < 1e-10);
    }
}

TEST_CASE("fiber rank is stable across rtol when the spectrum is separated") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 3;
        const Eigen::Index r = 1 + trial % 3;
        const ComplexMatrix m = random_weyl_value(n, r, rng);
        const int base = scattering_matrix(m, 1e-12).rank;
        for (double rtol : {1e-14, 1e-13, 1e-11, 1e-10}) CHECK(scattering_matrix(m, rtol).rank == base);
    }
}

TEST_CASE("assemble_nonsimple appends an identity block") {
    ScatteringSample s = scattering_matrix(scalar(kI));
    const ComplexMatrix full = assemble_nonsimple(s, 2);
    CHECK(full.rows() == 3);
    CHECK(full(0, 0) == s.s(0, 0));
    CHECK((full.bottomRightCorner(2, 2) - ComplexMatrix::Identity(2, 2)).norm() == 0.0);
    CHECK(full.bottomLeftCorner(2, 1).norm() == 0.0);
    CHECK_CODE(assemble_nonsimple(s, -1), ErrorCode::BadParameters);
}

TEST_CASE("DissipativeMatrix validation") {
    const DissipativeMatrix d(scalar(-kI, 2));
    CHECK((d.sqrt_neg_imag() - ComplexMatrix::Identity(2, 2)).norm() < 1e-15);
    CHECK_CODE(DissipativeMatrix(scalar(kI)), ErrorCode::NotDissipative);
    CHECK_CODE(DissipativeMatrix(scalar(1.0)), ErrorCode::NotDissipative);
    ComplexMatrix semi = scalar(-kI, 2);
    semi(1, 1) = 0.0;
    CHECK_CODE(DissipativeMatrix{semi}, ErrorCode::NotDissipative);
    CHECK_CODE(DissipativeMatrix(ComplexMatrix::Zero(1, 2)), ErrorCode::NotSquare);
}

TEST_CASE("coupled blocks for the uniform model at lambda = 0 with D = -i") {
    // M(0) = i pi, D = -i: X = (D - M)^{-1} = i / (1 + pi)
    const double p = kPi;
    const CoupledBlocks b = coupled_blocks(scalar(kI * p), DissipativeMatrix(scalar(-kI)));
    REQUIRE(b.rank == 1);
    REQUIRE(b.full.rows() == 2);
    ComplexMatrix expect(2, 2);
    expect << (1.0 - p) / (1.0 + p), -2.0 * std::sqrt(p) / (1.0 + p), -2.0 * std::sqrt(p) / (1.0 + p), (p - 1.0) / (1.0 + p);
    CHECK((b.full - expect).norm() < 1e-14);
    CHECK(b.full(0, 0).real() == doctest::Approx(-0.517094).epsilon(1e-5));
    CHECK(b.full(0, 1).real() == doctest::Approx(-0.855929).epsilon(1e-5));
    CHECK(defect_unitary(b.full) < 1e-14);
    CHECK((b.s22 - lax_phillips(scalar(kI * p), DissipativeMatrix(scalar(-kI)))).norm() < 1e-15);
}

TEST_CASE("coupled scattering: scalar oracle and unitarity") {
    const Complex m(0.3, 0.8), d(-0.4, -1.3);
    const Complex w = m - d;
    const ComplexMatrix s = coupled_scattering(scalar(m), DissipativeMatrix(scalar(d)));
    CHECK(std::abs(s(0, 0) - (1.0 - 2.0 * kI * w.imag() / w)) < 1e-14);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 1 + trial % 4;
        const ComplexMatrix mm = random_weyl_value(n, 1 + trial % n, rng);
        const DissipativeMatrix dd(random_dissipative(n, rng));
        CHECK(defect_unitary(coupled_scattering(mm, dd)) < 1e-10);
        const CoupledBlocks b = coupled_blocks(mm, dd);
        CHECK(defect_unitary(b.full) < 1e-10);
        const ComplexMatrix lp = lax_phillips(mm, dd);
        CHECK((b.s22 - lp).norm() < 1e-12);
        CHECK(defect_contraction(lp) < 1e-12);
        CHECK((b.full.topLeftCorner(b.rank, b.rank) - b.s11).norm() == 0.0);
        CHECK((b.full.bottomLeftCorner(n, b.rank) - b.s21).norm() == 0.0);
    }
}

TEST_CASE("Lax-Phillips with D = -i is the Cayley transform of M") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 4;
        const ComplexMatrix m = random_weyl_value(n, n, rng);
        const ComplexMatrix w = ComplexMatrix::Identity(n, n) - 2.0 * kI * (m + kI * ComplexMatrix::Identity(n, n)).inverse();
        CHECK((lax_phillips(m, DissipativeMatrix(scalar(-kI, n))) - w).norm() < 1e-13 * (1.0 + w.norm()));
    }
}

TEST_CASE("Lax-Phillips is unitary for real M and strictly contractive for M = i") {
    // real M: no channel leaks, so S^LP is unitary
    const ComplexMatrix lp = lax_phillips(scalar(0.7), DissipativeMatrix(scalar(-kI)));
    CHECK(defect_unitary(lp) < 1e-14);
    // M = i: strictly contractive
    CHECK(spectral_norm(lax_phillips(scalar(kI), DissipativeMatrix(scalar(-kI)))) < 1.0 - 1e-3);
}

TEST_CASE("coupled errors") {
    const DissipativeMatrix d(scalar(-kI));
    CHECK_CODE(coupled_scattering(scalar(kI, 2), d), ErrorCode::BadParameters);
    CHECK_CODE(lax_phillips(scalar(Complex(std::nan(""), 0.0)), d), ErrorCode::NonFinite);
}

TEST_CASE("appendix cross-check reproduces S") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 1 + trial % 4;
        const ComplexMatrix m = random_weyl_value(n, 1 + trial % n, rng);
        const double lambda = -2.0 + 0.15 * trial;
        const AppendixCheck c = appendix_cross_check(m, lambda);
        CHECK(c.discrepancy < 1e-10);
        CHECK((c.k - imag_part(m) / (kPi * (1.0 + lambda * lambda))).norm() < 1e-14 * (1.0 + m.norm()));
        CHECK((c.z * m + ComplexMatrix::Identity(n, n) / (1.0 + lambda * lambda)).norm() < 1e-10);
    }
}
