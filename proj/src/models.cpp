#include "pseudotherm/models.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "pseudotherm/errors.hpp"

namespace pt {

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::TwoLevel: return "two_level";
        case ModelKind::Oscillator: return "oscillator";
        case ModelKind::HatanoNelson: return "hatano_nelson";
    }
    return "?";
}

ComplexMatrix build_two_level(double lambda, double gamma) {
    return ComplexMatrix{{cplx(0, lambda), gamma}, {gamma, cplx(0, -lambda)}};
}

ComplexMatrix two_level_metric(double lambda, double gamma) {
    const double l = lambda / gamma;
    return ComplexMatrix{{2, cplx(0, -2 * l)}, {cplx(0, 2 * l), 2}};
}

ComplexMatrix two_level_transform(double lambda, double gamma) {
    const double l = lambda / gamma;
    if (std::abs(l) >= 1) throw Defective("no diagonalizing transform at or beyond the exceptional point");
    const double e = std::sqrt(1 - l * l);
    return ComplexMatrix{{1, cplx(e, -l)}, {1, cplx(-e, -l)}};
}

double relaxation_time(double lambda_f) {
    const auto e = eigendecompose(build_two_level(lambda_f));
    return 1.0 / std::abs(e.eigenvalues[1] - e.eigenvalues[0]);
}

std::shared_ptr<const OscillatorBasis> make_oscillator_basis(std::size_t n, double omega_ref, double mass, double xi) {
    using Key = std::tuple<std::size_t, double, double, double>;
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const OscillatorBasis>> cache;
    const Key key{n, omega_ref, mass, xi};
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }

    auto b = std::make_shared<OscillatorBasis>();
    b->n = n;
    b->omega_ref = omega_ref;
    b->mass = mass;
    b->xi = xi;
    b->x_fock = ComplexMatrix(n);
    b->p_fock = ComplexMatrix(n);
    const double xs = 1 / std::sqrt(2 * mass * omega_ref), ps = std::sqrt(mass * omega_ref / 2);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double s = std::sqrt(double(k + 1));
        b->x_fock(k, k + 1) = b->x_fock(k + 1, k) = xs * s;
        b->p_fock(k, k + 1) = cplx(0, -ps * s);
        b->p_fock(k + 1, k) = cplx(0, ps * s);
    }
    HermitianEigensystem xe = hermitian_eigensystem(b->x_fock);
    b->nodes = xe.values;
    b->fock_to_grid = xe.vectors;
    const ComplexMatrix& T = b->fock_to_grid;
    ComplexMatrix k = T.adjoint() * (b->p_fock * b->p_fock) * T;
    k *= 1 / (2 * mass);
    ComplexMatrix kin(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            // the kinetic operator is real symmetric on the grid
            const double kij = 0.5 * (k(i, j).real() + k(j, i).real());
            kin(i, j) = kij * std::exp(xi * (b->nodes[j] - b->nodes[i]));
        }
    b->kinetic = std::move(kin);

    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, std::move(b)).first->second;
}

ComplexMatrix build_oscillator(double omega, double xi, std::size_t n_basis, double omega_ref, double mass) {
    OscillatorParams p;
    p.omega = omega;
    p.xi = xi;
    p.n_basis = n_basis;
    p.omega_ref = omega_ref;
    p.mass = mass;
    return ModelSpec::make_oscillator(p).hamiltonian();
}

std::vector<double> oscillator_ladder(double omega, std::size_t count) {
    std::vector<double> e(count);
    for (std::size_t k = 0; k < count; ++k) e[k] = omega * (k + 0.5);
    return e;
}

ComplexMatrix build_hatano_nelson(std::size_t L, double t, double alpha, const std::vector<double>& V,
                                  Boundary boundary) {
    if (L < 2) throw InvalidArgument("Hatano-Nelson chain needs L >= 2");
    if (!V.empty() && V.size() != L) throw InvalidArgument("potential length differs from L");
    ComplexMatrix H(L);
    const double up = -0.5 * t * std::exp(-alpha), down = -0.5 * t * std::exp(alpha);
    for (std::size_t x = 0; x < L; ++x) {
        if (!V.empty()) H(x, x) = V[x];
        if (x + 1 < L) {
            H(x, x + 1) += up;
            H(x + 1, x) += down;
        }
    }
    if (boundary == Boundary::Periodic) {
        H(L - 1, 0) += up;
        H(0, L - 1) += down;
    }
    return H;
}

ModelSpec ModelSpec::make_two_level(double lambda, double gamma) {
    ModelSpec m;
    m.kind = ModelKind::TwoLevel;
    m.two_level = {lambda, gamma};
    m.validate();
    return m;
}

ModelSpec ModelSpec::make_oscillator(const OscillatorParams& p) {
    ModelSpec m;
    m.kind = ModelKind::Oscillator;
    m.oscillator = p;
    if (m.oscillator.omega_ref <= 0) m.oscillator.omega_ref = p.omega;
    m.validate();
    m.basis = make_oscillator_basis(p.n_basis, m.oscillator.omega_ref, p.mass, p.xi);
    return m;
}

ModelSpec ModelSpec::make_hatano_nelson(const HatanoNelsonParams& p) {
    ModelSpec m;
    m.kind = ModelKind::HatanoNelson;
    m.hatano_nelson = p;
    m.validate();
    return m;
}

void ModelSpec::validate() const {
    switch (kind) {
        case ModelKind::TwoLevel:
            if (!std::isfinite(two_level.lambda) || !(two_level.gamma > 0))
                throw InvalidArgument("two-level needs finite lambda and gamma > 0");
            break;
        case ModelKind::Oscillator:
            if (oscillator.n_basis < 8) throw InvalidArgument("oscillator n_basis must be >= 8");
            if (!(oscillator.omega > 0)) throw InvalidArgument("oscillator omega must be > 0");
            if (!(oscillator.mass > 0)) throw InvalidArgument("oscillator mass must be > 0");
            if (!std::isfinite(oscillator.xi)) throw InvalidArgument("oscillator xi must be finite");
            break;
        case ModelKind::HatanoNelson:
            if (hatano_nelson.length < 2) throw InvalidArgument("Hatano-Nelson length must be >= 2");
            if (!hatano_nelson.potential.empty() && hatano_nelson.potential.size() != hatano_nelson.length)
                throw InvalidArgument("Hatano-Nelson potential length differs from L");
            break;
    }
}

std::size_t ModelSpec::dimension() const {
    switch (kind) {
        case ModelKind::TwoLevel: return 2;
        case ModelKind::Oscillator: return oscillator.n_basis;
        case ModelKind::HatanoNelson: return hatano_nelson.length;
    }
    return 0;
}

double ModelSpec::control() const {
    switch (kind) {
        case ModelKind::TwoLevel: return two_level.lambda;
        case ModelKind::Oscillator: return oscillator.omega;
        case ModelKind::HatanoNelson: return hatano_nelson.alpha;
    }
    return 0;
}

ModelSpec ModelSpec::with_control(double value) const {
    ModelSpec m = *this;
    switch (kind) {
        case ModelKind::TwoLevel: m.two_level.lambda = value; break;
        case ModelKind::Oscillator:
            if (!(value > 0)) throw InvalidArgument("oscillator omega must stay positive");
            m.oscillator.omega = value;
            break;
        case ModelKind::HatanoNelson: m.hatano_nelson.alpha = value; break;
    }
    return m;
}

ComplexMatrix ModelSpec::hamiltonian() const {
    switch (kind) {
        case ModelKind::TwoLevel: return build_two_level(two_level.lambda, two_level.gamma);
        case ModelKind::Oscillator: {
            ComplexMatrix H = basis->kinetic;
            const double c = 0.5 * oscillator.mass * oscillator.omega * oscillator.omega;
            for (std::size_t i = 0; i < H.dim(); ++i) H(i, i) += c * basis->nodes[i] * basis->nodes[i];
            return H;
        }
        case ModelKind::HatanoNelson:
            return build_hatano_nelson(hatano_nelson.length, hatano_nelson.hopping, hatano_nelson.alpha,
                                       hatano_nelson.potential, hatano_nelson.boundary);
    }
    return {};
}

std::optional<MetricOperator> ModelSpec::analytic_metric() const {
    switch (kind) {
        case ModelKind::TwoLevel: {
            const double l = two_level.lambda / two_level.gamma;
            if (std::abs(l) == 1) throw SingularMetric("two-level metric is singular at the exceptional point");
            const double c = 1 / (2 * (1 - l * l));
            ComplexMatrix gi{{c, cplx(0, c * l)}, {cplx(0, -c * l), c}};
            return MetricOperator::from(two_level_metric(two_level.lambda, two_level.gamma), std::move(gi));
        }
        case ModelKind::Oscillator: {
            const std::size_t n = basis->n;
            CVector d(n), di(n);
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = std::exp(2 * oscillator.xi * basis->nodes[i]);
                di[i] = 1.0 / d[i];
            }
            MetricOperator m;
            m.g = ComplexMatrix::diagonal(d);
            m.g_inverse = ComplexMatrix::diagonal(di);
            m.positive_definite = true;
            double mn = d[0].real();
            for (auto v : d) mn = std::min(mn, v.real());
            m.min_eigenvalue = mn;
            return m;
        }
        case ModelKind::HatanoNelson: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<ComplexMatrix> ModelSpec::analytic_metric_rate(double control_rate) const {
    switch (kind) {
        case ModelKind::TwoLevel: {
            const double r = control_rate / two_level.gamma;
            return ComplexMatrix{{0, cplx(0, -2 * r)}, {cplx(0, 2 * r), 0}};
        }
        case ModelKind::Oscillator: return ComplexMatrix(dimension());  // g does not depend on omega
        case ModelKind::HatanoNelson: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<double> ModelSpec::analytic_partition_function(double beta) const {
    if (kind != ModelKind::Oscillator) return std::nullopt;
    return 1 / (2 * std::sinh(beta * oscillator.omega / 2));
}

}  // namespace pt
