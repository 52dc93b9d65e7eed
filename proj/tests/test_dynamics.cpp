#include "doctest.h"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "oracle.hpp"
#include "pseudotherm/dynamics.hpp"
#include "pseudotherm/errors.hpp"

using namespace pt;

namespace {

PropagateOptions loose(std::size_t steps, Integrator integ) {
    PropagateOptions o;
    o.steps = steps;
    o.tolerance = 1e300;
    o.unitarity_tolerance = 1e300;
    o.integrator = integ;
    return o;
}

ModelSpec small_oscillator(double xi) {
    OscillatorParams p;
    p.omega = 0.5;
    p.xi = xi;
    p.n_basis = 12;
    p.omega_ref = 0.6;
    return ModelSpec::make_oscillator(p);
}

// fourth-order oracle: Richardson-extrapolated product of midpoint exponentials
oracle::EM midpoint_oracle(const ModelSpec& m, const Protocol& pr, std::size_t n) {
    auto product = [&](std::size_t k) {
        const double t0 = pr.t_begin(), h = (pr.t_end() - t0) / double(k);
        oracle::EM U = oracle::EM::Identity(m.dimension(), m.dimension());
        for (std::size_t s = 0; s < k; ++s) {
            oracle::EM H = oracle::to_eigen(hamiltonian_at(m, pr, t0 + (s + 0.5) * h));
            U = (std::complex<double>(0, -h) * H).exp() * U;
        }
        return U;
    };
    return (4.0 * product(2 * n) - product(n)) / 3.0;
}

}  // namespace

TEST_CASE("protocol values") {
    auto lin = Protocol::linear(0, 0.5, 2);
    CHECK(lin.value(0) == 0);
    CHECK(lin.value(2) == 0.5);
    CHECK(lin.value(1) == doctest::Approx(0.25));
    CHECK(lin.rate(0.3) == doctest::Approx(0.25));
    CHECK_THROWS_AS(lin.value(-0.1), OutOfRange);
    CHECK_THROWS_AS(lin.value(2.1), OutOfRange);

    auto er = Protocol::erf(0.2, 0.6, 1, 1.5);
    CHECK(er.t_begin() == -1.5);
    CHECK(er.t_end() == 1.5);
    CHECK(er.value(0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(er.value(-1.5) == 0.2);
    CHECK(er.value(1.5) == 0.6);
    CHECK(er.value(0.7) > er.value(0.2));
    for (double t : {-1.2, -0.3, 0.0, 0.9}) {
        const double h = 1e-5;
        CHECK(er.rate(t) == doctest::Approx((er.value(t + h) - er.value(t - h)) / (2 * h)).epsilon(1e-8));
    }
    // continuous at the window edges
    CHECK(std::abs(er.value(-1.5 + 1e-9) - 0.2) < 1e-8);

    auto tab = Protocol::tabulated({{0, 0}, {1, 0.4}, {3, 0.2}});
    CHECK(tab.value(0.5) == doctest::Approx(0.2));
    CHECK(tab.value(2) == doctest::Approx(0.3));
    CHECK(tab.rate(2) == doctest::Approx(-0.1));
    CHECK_THROWS_AS(Protocol::tabulated({{0, 0}, {0, 1}}), InvalidArgument);
    CHECK_THROWS_AS(Protocol::linear(0, 1, 0), InvalidArgument);
}

TEST_CASE("hamiltonian along the protocol") {
    auto m = ModelSpec::make_two_level(0);
    auto pr = Protocol::linear(0, 0.5, 1);
    CHECK(oracle::max_diff(hamiltonian_at(m, pr, 0), ComplexMatrix{{0, 1}, {1, 0}}) == 0);
    CHECK(oracle::max_diff(hamiltonian_at(m, pr, 1), ComplexMatrix{{cplx(0, 0.5), 1}, {1, cplx(0, -0.5)}}) == 0);
    CHECK_THROWS_AS(hamiltonian_at(m, pr, 1.5), OutOfRange);

    auto osc = small_oscillator(0.3);
    auto er = Protocol::erf(0.2, 0.6, 1, 1.5);
    CHECK(hamiltonian_at(osc, er, 0).dim() == 12);
    CHECK(osc.with_control(er.value(0)).oscillator.omega == doctest::Approx(0.4));
}

TEST_CASE("gauge field") {
    auto m = ModelSpec::make_two_level(0.3);
    auto g = *m.analytic_metric();
    CHECK(gauge_field(g, ComplexMatrix(2), 1).max_abs() == 0);

    auto pr = Protocol::linear(0.1, 0.7, 3);
    const double t = 1.3;
    const ComplexMatrix dg = metric_rate_at(m, pr, t);
    const double r = 0.6 / 3;
    CHECK(oracle::max_diff(dg, ComplexMatrix{{0, cplx(0, -2 * r)}, {cplx(0, 2 * r), 0}}) < 1e-15);

    // central difference of the closed-form metric, step 1e-6
    const double h = 1e-6;
    ComplexMatrix fd = two_level_metric(pr.value(t + h)) - two_level_metric(pr.value(t - h));
    fd *= 1 / (2 * h);
    CHECK(oracle::max_diff(fd, dg) < 1e-6);

    const MetricOperator gt = metric_at(m, pr, t);
    const ComplexMatrix G = gauge_field(gt, dg, 1);
    ComplexMatrix want = gt.g_inverse * dg;
    want *= cplx(0, -0.5);
    CHECK(oracle::max_diff(G, want) < 1e-15);
    CHECK(oracle::max_diff(gauge_field(gt, cplx(2) * dg, 1), cplx(2) * G) < 1e-15);
    CHECK_THROWS_AS(gauge_field(MetricOperator{}, dg, 1), SingularMetric);

    // models without a closed form fall back to a central difference
    HatanoNelsonParams hp;
    hp.length = 4;
    auto hn = ModelSpec::make_hatano_nelson(hp);
    auto hpr = Protocol::linear(0, 0.5, 1);
    const ComplexMatrix d1 = metric_rate_at(hn, hpr, 0.5);
    ComplexMatrix d2 = metric_at(hn, hpr, 0.5 + 1e-4).g - metric_at(hn, hpr, 0.5 - 1e-4).g;
    d2 *= 1 / 2e-4;
    CHECK(oracle::max_diff(d1, d2) < 1e-6);
}

TEST_CASE("unitarity residual basics") {
    auto g = *ModelSpec::make_two_level(0.4).analytic_metric();
    CHECK(unitarity_residual(ComplexMatrix::identity(2), g, g) == 0);
    auto I = MetricOperator::from(ComplexMatrix::identity(2));
    ComplexMatrix U{{1, 0.1}, {0, 1}};
    CHECK(unitarity_residual(U, I, I) == doctest::Approx((U.adjoint() * U - ComplexMatrix::identity(2)).frobenius_norm()));
    CHECK(scaled_unitarity_residual(U, I, I) == doctest::Approx(unitarity_residual(U, I, I)));
}

TEST_CASE("constant sigma_x propagates to cos t - i sin t sigma_x") {
    const double T = 1.7;
    auto res = propagate(ModelSpec::make_two_level(0), Protocol::constant(0, T));
    const ComplexMatrix want{{std::cos(T), cplx(0, -std::sin(T))}, {cplx(0, -std::sin(T)), std::cos(T)}};
    CHECK(oracle::max_diff(res.U, want) < 1e-9);
    CHECK(res.checkpoints.size() >= 10);
    CHECK(res.step_size == doctest::Approx(T / double(res.steps_used)));
}

TEST_CASE("constant two-level at lambda = 0.5 matches the matrix exponential") {
    const double T = 2.5;
    for (auto integ : {Integrator::Rk4, Integrator::Magnus4}) {
        PropagateOptions o;
        o.integrator = integ;
        auto res = propagate(ModelSpec::make_two_level(0.5), Protocol::constant(0.5, T), o);
        oracle::EM want = (std::complex<double>(0, -T) * oracle::to_eigen(build_two_level(0.5))).exp();
        CHECK(oracle::max_diff(res.U, oracle::from_eigen(want)) < 1e-9);
    }
}

TEST_CASE("crossing the exceptional point is refused") {
    CHECK_THROWS_AS(propagate(ModelSpec::make_two_level(0), Protocol::linear(0, 1.2, 2)), SingularMetric);
    CHECK_THROWS_AS(propagate(ModelSpec::make_two_level(1.1), Protocol::constant(1.1, 1)), SingularMetric);
}

TEST_CASE("two-level linear quench is unitary in the moving metric") {
    for (auto integ : {Integrator::Rk4, Integrator::Magnus4}) {
        PropagateOptions o;
        o.integrator = integ;
        auto res = propagate(ModelSpec::make_two_level(0), Protocol::linear(0, 0.8, 3), o);
        CHECK(res.checkpoints.size() >= 10);
        for (const auto& c : res.checkpoints) {
            CHECK(c.raw_residual < 1e-8);
            CHECK(c.t > 0);
            CHECK(c.t < 3);
        }
        CHECK(unitarity_residual(res.U, res.g0, res.gT) < 1e-8);
        CHECK(res.convergence < 1e-8);
    }
}

TEST_CASE("composition over split windows") {
    auto m = ModelSpec::make_two_level(0.1);
    auto pr = Protocol::linear(0.1, 0.7, 2);
    auto full = propagate(m, pr);
    PropagateOptions a, b;
    a.to = 1.0;
    b.from = 1.0;
    auto first = propagate(m, pr, a), second = propagate(m, pr, b);
    CHECK(oracle::max_diff(full.U, second.U * first.U) < 1e-8);
    PropagateOptions bad;
    bad.from = -1.0;
    CHECK_THROWS_AS(propagate(m, pr, bad), OutOfRange);
}

TEST_CASE("numeric metric path stays unitary") {
    HatanoNelsonParams hp;
    hp.length = 4;
    hp.potential = {0.1, -0.3, 0.2, 0.0};
    auto res = propagate(ModelSpec::make_hatano_nelson(hp), Protocol::linear(0, 0.6, 2));
    for (const auto& c : res.checkpoints) CHECK(c.raw_residual < 1e-8);
}

TEST_CASE("hermitian reduction and gauge covariance of the oscillator") {
    auto pr = Protocol::linear(0.5, 0.8, 2);
    auto h0 = small_oscillator(0);
    auto res = propagate(h0, pr);
    oracle::EM want = midpoint_oracle(h0, pr, 1000);
    CHECK(oracle::max_diff(res.U, oracle::from_eigen(want)) < 1e-8);
    CHECK((res.U.adjoint() * res.U - ComplexMatrix::identity(12)).frobenius_norm() < 1e-8);

    PropagateOptions o;
    o.integrator = Integrator::Magnus4;
    auto mag = propagate(h0, pr, o);
    CHECK(oracle::max_diff(res.U, mag.U) < 1e-8);

    // xi != 0: U_xi = D^-1 U_0 D with D = e^{xi x}
    const double xi = 0.4;
    auto hx = small_oscillator(xi);
    auto rx = propagate(hx, pr, o);
    double err = 0;
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 12; ++j) {
            const double xi_ = hx.basis->nodes[i], xj = hx.basis->nodes[j];
            const cplx w = std::exp(-xi * xi_) * mag.U(i, j) * std::exp(xi * xj);
            err = std::max(err, std::abs(rx.U(i, j) - w) * std::exp(xi * (xi_ - xj)));
        }
    CHECK(err < 1e-8);
    for (const auto& c : rx.checkpoints) CHECK(c.residual < 1e-8);
}

TEST_CASE("both integrators are fourth order") {
    auto m = ModelSpec::make_two_level(0.2);
    auto pr = Protocol::erf(0.2, 0.7, 1, 1.5);
    PropagateOptions tight;
    tight.tolerance = 1e-12;
    tight.unitarity_tolerance = 1e-11;
    tight.integrator = Integrator::Magnus4;
    auto ref = propagate(m, pr, tight).U;
    for (auto integ : {Integrator::Rk4, Integrator::Magnus4}) {
        const double e1 = oracle::max_diff(propagate(m, pr, loose(16, integ)).U, ref);
        const double e2 = oracle::max_diff(propagate(m, pr, loose(32, integ)).U, ref);
        const double order = std::log2(e1 / e2);
        INFO(to_string(integ), " e1=", e1, " e2=", e2);
        CHECK(order > 3.6);
        CHECK(order < 4.6);
    }
}

TEST_CASE("non-convergence is reported") {
    PropagateOptions o;
    o.max_steps = 32;
    o.tolerance = 1e-15;
    CHECK_THROWS_AS(propagate(ModelSpec::make_two_level(0.3), Protocol::linear(0.3, 0.9, 50), o), NotConverged);
}
