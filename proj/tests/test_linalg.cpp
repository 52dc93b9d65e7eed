#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "oracle.hpp"
#include "pseudotherm/errors.hpp"
#include "pseudotherm/linalg.hpp"

using namespace pt;

namespace {

ComplexMatrix two_level(double lam) { return ComplexMatrix{{{0, lam}, 1}, {1, {0, -lam}}}; }

double biorth_error(const BiorthogonalEigensystem& e) {
    double m = 0;
    for (std::size_t a = 0; a < e.dim(); ++a)
        for (std::size_t b = 0; b < e.dim(); ++b)
            m = std::max(m, std::abs(dotc(e.left[a], e.right[b]) - (a == b ? 1.0 : 0.0)));
    return m;
}

double completeness_error(const BiorthogonalEigensystem& e) {
    ComplexMatrix s(e.dim());
    for (std::size_t k = 0; k < e.dim(); ++k) s += outer(e.right[k], e.left[k]);
    return (s - ComplexMatrix::identity(e.dim())).frobenius_norm();
}

double eigen_residual(const ComplexMatrix& H, const BiorthogonalEigensystem& e) {
    double m = 0;
    const ComplexMatrix Hd = H.adjoint();
    for (std::size_t k = 0; k < e.dim(); ++k) {
        CVector r = H * e.right[k], l = Hd * e.left[k];
        for (std::size_t i = 0; i < e.dim(); ++i) {
            r[i] -= e.eigenvalues[k] * e.right[k][i];
            l[i] -= std::conj(e.eigenvalues[k]) * e.left[k][i];
        }
        m = std::max({m, norm2(r), norm2(l) / norm2(e.left[k])});
    }
    return m;
}

// a diagonalizable matrix with prescribed spectrum, S diag(E) S^-1
ComplexMatrix with_spectrum(const std::vector<cplx>& E, std::mt19937_64& rng) {
    const std::size_t n = E.size();
    ComplexMatrix S = oracle::random_matrix(n, rng);
    for (std::size_t i = 0; i < n; ++i) S(i, i) += 3.0;
    return S * ComplexMatrix::diagonal(E) * inverse(S);
}

}  // namespace

TEST_CASE("diagonal matrix decomposes into the standard basis") {
    auto e = eigendecompose(ComplexMatrix{{1, 0}, {0, 2}});
    CHECK(e.eigenvalues[0].real() == doctest::Approx(1.0));
    CHECK(e.eigenvalues[1].real() == doctest::Approx(2.0));
    CHECK(std::abs(e.right[0][0] - 1.0) < 1e-15);
    CHECK(std::abs(e.left[1][1] - 1.0) < 1e-15);
    CHECK(std::abs(e.right[0][1]) < 1e-15);
}

TEST_CASE("two-level eigenvalues are plus/minus sqrt(1 - lambda^2)") {
    auto e = eigendecompose(two_level(0.5));
    CHECK(std::abs(e.eigenvalues[0] - cplx(-std::sqrt(0.75), 0)) < 1e-13);
    CHECK(std::abs(e.eigenvalues[1] - cplx(std::sqrt(0.75), 0)) < 1e-13);
    CHECK(biorth_error(e) < 1e-12);
}

TEST_CASE("exceptional point is reported as defective") {
    CHECK_THROWS_AS(eigendecompose(two_level(1.0)), Defective);
    CHECK_THROWS_AS(eigendecompose(ComplexMatrix{{0, 1}, {0, 0}}), Defective);
    // just inside the unbroken regime the decomposition still succeeds
    CHECK_NOTHROW(eigendecompose(two_level(0.999)));
}

TEST_CASE("defect threshold is configurable") {
    Tolerances loose;
    loose.defect_condition = 1e3;
    CHECK_THROWS_AS(eigendecompose(two_level(0.9999999), loose), Defective);
}

TEST_CASE("eigensystem invariants on random matrices against Eigen") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + trial % 31;
        ComplexMatrix H = oracle::random_matrix(n, rng);
        auto e = eigendecompose(H);
        CHECK(biorth_error(e) < 1e-10);
        CHECK(completeness_error(e) < 1e-9);
        CHECK(eigen_residual(H, e) < 1e-10 * std::max(1.0, H.frobenius_norm()));

        Eigen::ComplexEigenSolver<oracle::EM> ces(oracle::to_eigen(H));
        std::vector<cplx> ref(ces.eigenvalues().data(), ces.eigenvalues().data() + n);
        for (const cplx& x : e.eigenvalues) {
            double best = 1e300;
            for (const cplx& y : ref) best = std::min(best, std::abs(x - y));
            CHECK(best < 1e-9);
        }
        for (std::size_t k = 0; k + 1 < n; ++k) CHECK(e.eigenvalues[k].real() <= e.eigenvalues[k + 1].real());
        for (const auto& psi : e.right) {
            CHECK(std::abs(norm2(psi) - 1) < 1e-12);
            double amax = 0;
            for (auto v : psi) amax = std::max(amax, std::abs(v));
            const auto it = std::find_if(psi.begin(), psi.end(),
                                         [&](cplx v) { return std::abs(v) >= (1 - 1e-10) * amax; });
            CHECK(it->imag() == 0.0);
            CHECK(it->real() > 0);
        }
    }
}

TEST_CASE("badly scaled diagonal similarity is handled through balancing") {
    std::mt19937_64 rng(5);
    const std::size_t n = 24;
    ComplexMatrix A = oracle::random_matrix(n, rng);
    A = 0.5 * (A + A.adjoint());
    CVector d(n), di(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = std::exp(1.5 * (double(i) - n / 2.0));
        di[i] = 1.0 / d[i];
    }
    ComplexMatrix H = ComplexMatrix::diagonal(di) * A * ComplexMatrix::diagonal(d);
    auto e = eigendecompose(H);
    auto ref = hermitian_eigenvalues(A);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(e.eigenvalues[k].imag()) < 1e-10);
        CHECK(std::abs(e.eigenvalues[k].real() - ref[k]) < 1e-10);
    }
    CHECK(e.overlap_condition < 1e3);
}

TEST_CASE("repeated eigenvalues form one degeneracy group") {
    std::mt19937_64 rng(9);
    ComplexMatrix H = with_spectrum({1.0, 1.0, 2.5, -0.5}, rng);
    auto e = eigendecompose(H);
    CHECK(biorth_error(e) < 1e-10);
    CHECK(completeness_error(e) < 1e-9);
    CHECK(e.degeneracy_groups.size() == 3);
    bool found = false;
    for (const auto& g : e.degeneracy_groups) found |= g.size() == 2;
    CHECK(found);
}

TEST_CASE("spectrum classification") {
    CHECK(classify_spectrum({1.0, 2.5}).kind == SpectrumKind::AllReal);
    auto c = classify_spectrum({-1.1276, 1.1276, cplx(0, 0.5211), cplx(0, -0.5211)}, 1e-9);
    CHECK(c.kind == SpectrumKind::ConjugatePaired);
    CHECK(c.partner[2] == 3);
    CHECK(c.partner[0] == 0);
    CHECK(classify_spectrum({cplx(1, 0.3), 2.0}).kind == SpectrumKind::Generic);
    CHECK(classify_spectrum({cplx(1, 0.3), cplx(1, 0.3)}).kind == SpectrumKind::Generic);
}

TEST_CASE("metric of a hermitian matrix is the identity") {
    ComplexMatrix H{{2, {0, 1}}, {{0, -1}, -1}};
    auto g = build_metric(eigendecompose(H));
    CHECK(oracle::max_diff(g.g, ComplexMatrix::identity(2)) < 1e-14);
    CHECK(g.positive_definite);
}

TEST_CASE("two-level metric eigenvalues are in ratio (1-lambda):(1+lambda)") {
    for (double lam : {0.1, 0.5, 0.9, -0.7}) {
        auto g = build_metric(eigendecompose(two_level(lam)));
        auto ev = hermitian_eigenvalues(g.g);
        CHECK(ev[1] / ev[0] == doctest::Approx((1 + std::abs(lam)) / (1 - std::abs(lam))).epsilon(1e-12));
        CHECK(g.positive_definite);
        CHECK(g.min_eigenvalue == doctest::Approx(ev[0]));
        CHECK(oracle::max_diff(g.g * g.g_inverse, ComplexMatrix::identity(2)) < 1e-12);
    }
}

TEST_CASE("pseudo-hermiticity residual") {
    ComplexMatrix H = two_level(0.7);
    auto g = build_metric(eigendecompose(H));
    CHECK(pseudo_hermiticity_residual(H, g) < 1e-12);
    auto id = MetricOperator::from(ComplexMatrix::identity(2), ComplexMatrix::identity(2));
    CHECK(pseudo_hermiticity_residual(H, id) == doctest::Approx(2 * 0.7 * std::sqrt(2.0)).epsilon(1e-14));
    ComplexMatrix Hh{{1, {0, 2}}, {{0, -2}, 3}};
    CHECK(pseudo_hermiticity_residual(Hh, id) == 0.0);
}

TEST_CASE("conjugate-paired spectra give an indefinite metric") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        ComplexMatrix H = with_spectrum({cplx(0.3, 0.8), cplx(0.3, -0.8), -1.0, 2.0, cplx(-2, 0.1), cplx(-2, -0.1)},
                                        rng);
        auto e = eigendecompose(H);
        REQUIRE(classify_spectrum(e.eigenvalues).kind == SpectrumKind::ConjugatePaired);
        auto g = build_metric(e);
        CHECK_FALSE(g.positive_definite);
        CHECK(g.min_eigenvalue < 0);
        CHECK(pseudo_hermiticity_residual(H, g) < 1e-9 * g.g.frobenius_norm() * H.frobenius_norm());
        CHECK(oracle::max_diff(g.g * g.g_inverse, ComplexMatrix::identity(6)) < 1e-9);

        // g^-1 maps the left vector of E onto the right vector of E*
        auto cls = classify_spectrum(e.eigenvalues);
        for (std::size_t k = 0; k < e.dim(); ++k) {
            CVector v = g.g_inverse * e.left[k];
            const CVector& w = e.right[cls.partner[k]];
            const cplx proj = dotc(w, v) / dotc(w, w);
            CVector r = v;
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= proj * w[i];
            CHECK(norm2(r) / norm2(v) < 1e-8);
        }
    }
}

TEST_CASE("generic spectra have no metric") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(build_metric(eigendecompose(with_spectrum({cplx(1, 0.3), 2.0, -1.0}, rng))),
                    NotPseudoHermitian);
}

TEST_CASE("metric definiteness tracks the spectrum class on random pseudo-hermitian matrices") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<cplx> E;
        const bool paired = trial % 2;
        for (int k = 0; k < 3; ++k) E.push_back(u(rng));
        if (paired) {
            cplx z(u(rng), 0.2 + std::abs(u(rng)));
            E.push_back(z);
            E.push_back(std::conj(z));
        } else {
            E.push_back(u(rng));
            E.push_back(u(rng));
        }
        auto e = eigendecompose(with_spectrum(E, rng));
        auto g = build_metric(e);
        CHECK(g.positive_definite == (classify_spectrum(e.eigenvalues).kind == SpectrumKind::AllReal));
    }
}

TEST_CASE("g_inner") {
    auto id = MetricOperator::from(ComplexMatrix::identity(2), ComplexMatrix::identity(2));
    CVector u{cplx(1, 2), 3}, v{cplx(0, 1), cplx(-1, 1)};
    CHECK(std::abs(g_inner(u, v, id) - dotc(u, v)) < 1e-15);
    ComplexMatrix sx{{0, 1}, {1, 0}};
    auto gx = MetricOperator::from(sx, sx);
    CHECK_FALSE(gx.positive_definite);
    CHECK(std::abs(g_inner(CVector{1, 0}, CVector{1, 0}, gx)) == 0.0);
    CHECK(std::abs(g_inner(u, v, gx) - std::conj(g_inner(v, u, gx))) < 1e-15);
    CHECK(g_inner(CVector{1, 1}, CVector{1, 1}, gx).real() > 0);
    CHECK(g_inner(CVector{1, -1}, CVector{1, -1}, gx).real() < 0);
}

TEST_CASE("g_trace equals the plain trace") {
    auto e = eigendecompose(two_level(0.5));
    auto g = build_metric(e);
    CHECK(std::abs(g_trace(ComplexMatrix::identity(2), e, g) - 2.0) < 1e-13);

    // rho H for the Gibbs state at beta = 1
    ComplexMatrix rho(2);
    cplx Z{};
    for (std::size_t k = 0; k < 2; ++k) {
        rho += std::exp(-e.eigenvalues[k]) * outer(e.right[k], e.left[k]);
        Z += std::exp(-e.eigenvalues[k]);
    }
    rho *= 1.0 / Z;
    const cplx E = g_trace(rho * two_level(0.5), e, g);
    CHECK(std::abs(E.imag()) < 1e-12);
    CHECK(E.real() == doctest::Approx(-std::sqrt(0.75) * std::tanh(std::sqrt(0.75))).epsilon(1e-12));

    // any positive multiple of the metric gives the same trace
    auto g2 = MetricOperator::from(ComplexMatrix{{2, {0, -1}}, {{0, 1}, 2}});
    CHECK(std::abs(g_trace(rho, e, g2) - 1.0) < 1e-12);

    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        ComplexMatrix H = with_spectrum({cplx(0.5, 1), cplx(0.5, -1), 0.1, 1.4, 3.0}, rng);
        auto es = eigendecompose(H);
        auto gs = build_metric(es);
        ComplexMatrix A = oracle::random_matrix(5, rng);
        const cplx tr = A.trace();
        CHECK(std::abs(g_trace(A, es, gs) - tr) < 1e-9 * std::abs(tr));
    }
}

TEST_CASE("dense helpers against Eigen") {
    std::mt19937_64 rng(99);
    for (std::size_t n : {1, 2, 5, 12, 30}) {
        ComplexMatrix A = oracle::random_matrix(n, rng);
        CHECK(oracle::max_diff(inverse(A) * A, ComplexMatrix::identity(n)) < 1e-10);

        auto sv = singular_values(A);
        Eigen::JacobiSVD<oracle::EM> svd(oracle::to_eigen(A));
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(sv[k] - svd.singularValues()(k)) < 1e-12 * sv[0]);

        ComplexMatrix Hm = 0.5 * (A + A.adjoint());
        auto ev = hermitian_eigenvalues(Hm);
        Eigen::SelfAdjointEigenSolver<oracle::EM> sae(oracle::to_eigen(Hm));
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(ev[k] - sae.eigenvalues()(k)) < 1e-12 * (1 + std::abs(ev[k])));

        for (double s : {0.01, 1.0, 7.0}) {
            ComplexMatrix As = cplx(s) * A;
            oracle::EM ref = oracle::to_eigen(As).exp();
            ComplexMatrix mine = expm(As);
            CHECK(oracle::max_diff(mine, oracle::from_eigen(ref)) < 1e-11 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
        }
    }
    CHECK_THROWS_AS(inverse(ComplexMatrix{{1, 2}, {2, 4}}), SingularMatrix);
}

TEST_CASE("hermitian eigenvalues keep relative accuracy on graded matrices") {
    // D A D with A well conditioned: smallest eigenvalue ~ 1e-20 of the largest
    const std::size_t n = 6;
    ComplexMatrix A(n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = 2;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = cplx(0, 0.5);
    }
    CVector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = std::pow(1e-4, double(i));
    ComplexMatrix G = ComplexMatrix::diagonal(d) * A * ComplexMatrix::diagonal(d);
    auto ev = hermitian_eigenvalues(G);
    CHECK(ev.front() > 0);
    // Cholesky pivots of a graded tridiagonal, computed independently
    Eigen::LLT<oracle::EM> llt(oracle::to_eigen(G));
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("expm of a badly scaled similarity stays accurate") {
    const std::size_t n = 10;
    ComplexMatrix A(n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = double(i) * 0.3;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = 0.7;
    }
    A *= cplx(0, -1);
    CVector d(n), di(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = std::exp(3.0 * i);
        di[i] = 1.0 / d[i];
    }
    ComplexMatrix U = expm(A);
    ComplexMatrix Us = expm(ComplexMatrix::diagonal(di) * A * ComplexMatrix::diagonal(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            CHECK(std::abs(Us(i, j) * d[i] / d[j] - U(i, j)) < 1e-13);
}
