#include <doctest.h>

#include <limits>
#include <random>

#include "qfc/hilbert.hpp"

using namespace qfc;

TEST_CASE("kron identity and pauli blocks") {
    const ComplexMatrix i2 = identity(2);
    CHECK((kron(i2, i2) - identity(4)).cwiseAbs().maxCoeff() == 0.0);

    ComplexMatrix expected(4, 4);
    expected << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1;
    CHECK((kron(pauli_z(), i2) - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    const ComplexMatrix xx = kron(pauli_x(), pauli_x());
    CHECK((xx * xx - identity(4)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("kron is associative") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix a = random_hermitian(2, rng);
        const ComplexMatrix b = random_hermitian(3, rng);
        const ComplexMatrix c = random_hermitian(2, rng);
        const ComplexMatrix lhs = kron(kron(a, b), c);
        const ComplexMatrix rhs = kron(a, kron(b, c));
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("expectation values") {
    const DensityMatrix up = DensityMatrix::basis_state(2, 0);
    CHECK(expectation(pauli_z(), up).real() == doctest::Approx(1.0));

    ComplexVector plus(2);
    plus << 1, 1;
    CHECK(std::abs(expectation(pauli_z(), DensityMatrix::pure(plus))) <= 1e-12);

    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 0.7;
    diag(1, 1) = 0.3;
    CHECK(std::abs(expectation(pauli_x(), DensityMatrix::validated(diag))) <= 1e-12);

    CHECK_THROWS_AS(expectation(identity(3), up), DimensionError);
}

TEST_CASE("expectation of a Hermitian operator is real on random states") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 7);
        const ComplexMatrix h = random_hermitian(dim, rng);
        const DensityMatrix rho = random_density_matrix(dim, rng);
        CHECK(std::abs(expectation(h, rho).imag()) <= 1e-10);
    }
}

TEST_CASE("fidelity basics") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const DensityMatrix rho = random_density_matrix(4, rng);
        CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-9));
    }
    const DensityMatrix zero = DensityMatrix::basis_state(2, 0);
    const DensityMatrix one = DensityMatrix::basis_state(2, 1);
    CHECK(fidelity(zero, one) <= 1e-12);
    CHECK(fidelity(zero, DensityMatrix::maximally_mixed(2)) == doctest::Approx(0.5));
}

TEST_CASE("fidelity against pure states reduces to the overlap") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const DensityMatrix rho = random_density_matrix(5, rng);
        const DensityMatrix psi = random_pure_state(5, rng);
        const double direct = (rho.mat * psi.mat).trace().real();
        CHECK(fidelity(rho, psi) == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("ladder operators") {
    const auto [a2, a2dag] = ladder_operators(2);
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    expected(0, 1) = 1;
    CHECK((a2 - expected).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("commutator is i on all but the truncation corner") {
        const int n = 4;
        const auto [a, adag] = ladder_operators(n);
        const ComplexMatrix x = (a + adag) / std::sqrt(2.0);
        const ComplexMatrix p = Complex(0, 1) * (adag - a) / std::sqrt(2.0);
        const ComplexMatrix c = x * p - p * x;
        for (int k = 0; k < n - 1; ++k) CHECK(std::abs(c(k, k) - Complex(0, 1)) <= 1e-12);
        CHECK(std::abs(c(n - 1, n - 1) - Complex(0, 1)) > 0.1);  // truncation artifact
    }

    SUBCASE("number operator diagonal") {
        const int n = 6;
        const auto [a, adag] = ladder_operators(n);
        const ComplexMatrix num = adag * a;
        for (int k = 0; k < n; ++k) CHECK(num(k, k).real() == doctest::Approx(k));
    }

    CHECK_THROWS_AS(ladder_operators(1), ValidationError);
}

TEST_CASE("psd sqrt squares back") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 7);
        const DensityMatrix rho = random_density_matrix(dim, rng);
        const ComplexMatrix s = psd_sqrt(rho.mat);
        CHECK((s * s - rho.mat).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("density matrix validation") {
    ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
    bad(0, 0) = 1.5;
    bad(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix::validated(bad), ValidationError);

    ComplexMatrix nonherm = ComplexMatrix::Zero(2, 2);
    nonherm(0, 0) = 1.0;
    nonherm(0, 1) = Complex(0, 1e-3);
    CHECK_THROWS_AS(DensityMatrix::validated(nonherm), ValidationError);

    CHECK_NOTHROW(DensityMatrix::validated(identity(3) / 3.0));
}

TEST_CASE("post-step normalization leaves small excursions signed, aborts gross ones") {
    // Transient negative excursions of the integrator stay untouched (clipping
    // them every step would bias the dynamics); trace is renormalized.
    ComplexMatrix typical = ComplexMatrix::Zero(2, 2);
    typical(0, 0) = 1.0 + 2e-3;
    typical(1, 1) = -2e-3;
    repair_state(typical);
    CHECK(typical(1, 1).real() == doctest::Approx(-2e-3).epsilon(1e-2));
    CHECK(typical.trace().real() == doctest::Approx(1.0));

    ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
    bad(0, 0) = 1.3;
    bad(1, 1) = -0.3;
    CHECK_THROWS_AS(repair_state(bad), PositivityError);

    ComplexMatrix junk = ComplexMatrix::Zero(2, 2);
    junk(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(repair_state(junk), PositivityError);

    SUBCASE("boundary clip produces a valid state") {
        ComplexMatrix m = ComplexMatrix::Zero(3, 3);
        m(0, 0) = 0.9;
        m(1, 1) = 0.2;
        m(2, 2) = -0.1;
        const ComplexMatrix c = clip_to_psd(m);
        CHECK(c(2, 2).real() >= 0.0);
        CHECK(c.trace().real() == doctest::Approx(1.0));
    }
}

TEST_CASE("hilbert space embedding") {
    const HilbertSpace space({2, 3});
    CHECK(space.dim() == 6);
    const ComplexMatrix sz1 = space.embed(pauli_z(), 0);
    CHECK(sz1.rows() == 6);
    CHECK(sz1(0, 0) == Complex(1, 0));
    CHECK(sz1(3, 3) == Complex(-1, 0));
    CHECK_THROWS_AS(space.embed(pauli_z(), 1), DimensionError);
}

TEST_CASE("coherent state moments") {
    const int n = 30;
    const ComplexVector psi = coherent_state(n, 1.5);
    const auto [a, adag] = ladder_operators(n);
    const Complex mean_a = (psi.adjoint() * a * psi)(0);
    CHECK(mean_a.real() == doctest::Approx(1.5).epsilon(1e-9));
    const double mean_n = (psi.adjoint() * adag * a * psi)(0).real();
    CHECK(mean_n == doctest::Approx(2.25).epsilon(1e-9));
}
