#include "pseudotherm/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pseudotherm/errors.hpp"

namespace pt {

cplx partition_function(const std::vector<cplx>& eigs, double beta) {
    if (!(beta > 0)) throw InvalidArgument("beta must be > 0");
    cplx z = 0;
    for (auto e : eigs) z += std::exp(-beta * e);
    return z;
}

double free_energy(cplx Z, double beta, double tol) {
    if (!(beta > 0)) throw InvalidArgument("beta must be > 0");
    if (std::abs(Z.imag()) > tol * std::max(1.0, std::abs(Z))) {
        std::ostringstream os;
        os << "Z = " << Z.real() << (Z.imag() < 0 ? " - " : " + ") << std::abs(Z.imag()) << "i";
        throw ComplexPartitionFunction(os.str());
    }
    if (!(Z.real() > 0)) throw ComplexPartitionFunction("partition function is not positive");
    return -std::log(Z.real()) / beta;
}

ThermalState thermal_state(const std::vector<cplx>& eigs, double beta) {
    if (!(beta > 0)) throw InvalidArgument("beta must be > 0");
    if (eigs.empty()) throw InvalidArgument("empty spectrum");
    ThermalState s;
    s.beta = beta;
    s.shift = eigs[0].real();
    for (auto e : eigs) s.shift = std::min(s.shift, e.real());
    s.weights.resize(eigs.size());
    s.reduced_Z = 0;
    for (std::size_t n = 0; n < eigs.size(); ++n) {
        s.weights[n] = std::exp(-beta * (eigs[n] - s.shift));
        s.reduced_Z += s.weights[n];
    }
    s.populations.resize(eigs.size());
    for (std::size_t n = 0; n < eigs.size(); ++n) {
        s.weights[n] /= s.reduced_Z;
        s.populations[n] = s.weights[n].real();
    }
    s.Z = std::exp(-beta * s.shift) * s.reduced_Z;
    s.F = s.shift - std::log(s.reduced_Z) / beta;
    return s;
}

namespace {

cplx complex_energy(const ThermalState& s, const std::vector<cplx>& eigs) {
    if (eigs.size() != s.weights.size()) throw InvalidArgument("spectrum does not match the thermal state");
    cplx e = 0;
    for (std::size_t n = 0; n < eigs.size(); ++n) e += eigs[n] * s.weights[n];
    return e;
}

// beta (E - F), computed relative to the shift so large beta stays finite
cplx complex_entropy(const ThermalState& s, const std::vector<cplx>& eigs) {
    cplx e = 0;
    for (std::size_t n = 0; n < eigs.size(); ++n) e += (eigs[n] - s.shift) * s.weights[n];
    return s.beta * e + std::log(s.reduced_Z);
}

double real_or_throw(cplx v, double tol, const char* what) {
    if (!std::isfinite(v.real()) || std::abs(v.imag()) > tol * std::max(1.0, std::abs(v))) {
        std::ostringstream os;
        os << what << " has imaginary part " << v.imag() << " (real part " << v.real() << ")";
        throw NonRealResult(os.str());
    }
    return v.real();
}

}  // namespace

double internal_energy(const ThermalState& state, const std::vector<cplx>& eigs, double tol) {
    real_or_throw(state.reduced_Z, tol, "partition function");
    return real_or_throw(complex_energy(state, eigs), tol, "internal energy");
}

double entropy(const ThermalState& state, const std::vector<cplx>& eigs, double tol) {
    real_or_throw(state.reduced_Z, tol, "partition function");
    return real_or_throw(complex_entropy(state, eigs), tol, "entropy");
}

double tail_mass(const ThermalState& state, std::size_t count) {
    double m = 0;
    const std::size_t n = state.populations.size();
    for (std::size_t k = n - std::min(n, count); k < n; ++k) m += std::abs(state.weights[k]);
    return m;
}

ComplexMatrix projector(std::size_t n, const BiorthogonalEigensystem& eig) {
    if (n >= eig.dim()) throw InvalidArgument("projector index out of range");
    return outer(eig.right[n], eig.left[n]);
}

ComplexMatrix density_matrix(const ThermalState& state, const BiorthogonalEigensystem& eig) {
    ComplexMatrix rho(eig.dim());
    for (std::size_t n = 0; n < eig.dim(); ++n) rho.add_scaled(state.weights[n], projector(n, eig));
    return rho;
}

double TransitionMatrix::row_overlap_sum(std::size_t n) const {
    double s = 0;
    for (std::size_t m = 0; m < cols; ++m) s += overlap[n * cols + m];
    return s;
}

namespace {

// eigenvectors made orthonormal in the g inner product; Gram-Schmidt only
// mixes vectors inside one degeneracy group
std::vector<CVector> g_orthonormal(const BiorthogonalEigensystem& eig, const MetricOperator& g) {
    std::vector<CVector> v = eig.right;
    for (const auto& group : eig.degeneracy_groups) {
        for (std::size_t a = 0; a < group.size(); ++a) {
            CVector& x = v[group[a]];
            for (std::size_t b = 0; b < a; ++b) {
                const CVector& y = v[group[b]];
                const cplx c = g_inner(y, x, g);
                for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * y[i];
            }
            const double nrm = g_inner(x, x, g).real();
            if (!(nrm > 0)) throw SingularMetric("eigenvector has non-positive metric norm");
            for (auto& xi : x) xi /= std::sqrt(nrm);
        }
    }
    return v;
}

}  // namespace

TransitionMatrix transition_matrix(const BiorthogonalEigensystem& eig0, const BiorthogonalEigensystem& eigT,
                                   const MetricOperator& g0, const MetricOperator& gT, const ComplexMatrix& U,
                                   const ThermalState& state0) {
    if (classify_spectrum(eig0.eigenvalues).kind != SpectrumKind::AllReal ||
        classify_spectrum(eigT.eigenvalues).kind != SpectrumKind::AllReal)
        throw NonRealSpectrum("two-time measurement needs real spectra at both ends");
    const std::size_t n = eig0.dim();
    if (eigT.dim() != n || U.dim() != n || state0.populations.size() != n)
        throw InvalidArgument("dimension mismatch in transition_matrix");
    const auto a = g_orthonormal(eig0, g0);
    const auto b = g_orthonormal(eigT, gT);
    std::vector<CVector> dual(n);
    for (std::size_t m = 0; m < n; ++m) dual[m] = gT.g * b[m];

    TransitionMatrix t;
    t.rows = t.cols = n;
    t.overlap.resize(n * n);
    t.p.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const CVector evolved = U * a[i];
        for (std::size_t m = 0; m < n; ++m) {
            const double o = std::norm(dotc(dual[m], evolved));
            t.overlap[i * n + m] = o;
            t.p[i * n + m] = state0.populations[i] * o;
        }
    }
    return t;
}

double WorkDistribution::total() const {
    double s = 0;
    for (const auto& e : entries) s += e.p;
    return s;
}

WorkDistribution work_distribution(const TransitionMatrix& p, const BiorthogonalEigensystem& eig0,
                                   const BiorthogonalEigensystem& eigT, double beta) {
    if (p.rows != eig0.dim() || p.cols != eigT.dim()) throw InvalidArgument("transition matrix shape mismatch");
    WorkDistribution wd;
    wd.beta = beta;
    wd.entries.reserve(p.rows * p.cols);
    for (std::size_t n = 0; n < p.rows; ++n)
        for (std::size_t m = 0; m < p.cols; ++m)
            wd.entries.push_back({n, m, eigT.eigenvalues[m].real() - eig0.eigenvalues[n].real(), p.at(n, m)});
    wd.Z0 = partition_function(eig0.eigenvalues, beta).real();
    wd.Ztau = partition_function(eigT.eigenvalues, beta).real();
    wd.Emin_initial = eig0.eigenvalues.front().real();
    wd.Emin_final = eigT.eigenvalues.front().real();
    for (auto e : eig0.eigenvalues) wd.Emin_initial = std::min(wd.Emin_initial, e.real());
    for (auto e : eigT.eigenvalues) wd.Emin_final = std::min(wd.Emin_final, e.real());
    return wd;
}

JarzynskiReport jarzynski_report(const WorkDistribution& wd) {
    JarzynskiReport r;
    for (const auto& e : wd.entries) {
        r.exp_avg_work += std::exp(-wd.beta * e.w) * e.p;
        r.mean_work += e.w * e.p;
    }
    r.exp_delta_F = wd.Ztau / wd.Z0;
    r.relative_residual = std::abs(r.exp_avg_work - r.exp_delta_F) / r.exp_delta_F;
    r.delta_F = -std::log(r.exp_delta_F) / wd.beta;
    r.irreversible_work = r.mean_work - r.delta_F;
    return r;
}

double exp_work_partial_sum(const TransitionMatrix& p, const BiorthogonalEigensystem& eigT, double beta, double Z0,
                            std::size_t n_max) {
    n_max = std::min({n_max, p.rows, p.cols});
    double s = 0;
    for (std::size_t n = 0; n < n_max; ++n)
        for (std::size_t m = 0; m < n_max; ++m)
            s += p.overlap_at(n, m) * std::exp(-beta * eigT.eigenvalues[m].real());
    return s / Z0;
}

TwoTimeResult two_time_measurement(const ModelSpec& model, const Protocol& protocol, double beta,
                                   const PropagateOptions& opt) {
    TwoTimeResult r;
    r.propagation = propagate(model, protocol, opt);
    const auto& pr = r.propagation;
    r.eig0 = eigendecompose(model.with_control(protocol.value(pr.t_begin)).hamiltonian());
    r.eigT = eigendecompose(model.with_control(protocol.value(pr.t_end)).hamiltonian());
    r.state0 = thermal_state(r.eig0.eigenvalues, beta);
    r.tail_mass = tail_mass(r.state0);
    r.transitions = transition_matrix(r.eig0, r.eigT, pr.g0, pr.gT, pr.U, r.state0);
    for (std::size_t n = 0; n < r.transitions.rows; ++n)
        r.max_row_error = std::max(r.max_row_error, std::abs(r.transitions.row_overlap_sum(n) - 1));
    r.work = work_distribution(r.transitions, r.eig0, r.eigT, beta);
    r.report = jarzynski_report(r.work);
    r.adiabatic_work = adiabatic_work(r.state0, r.eig0, r.eigT);
    return r;
}

double adiabatic_work(const ThermalState& state0, const BiorthogonalEigensystem& eig0,
                      const BiorthogonalEigensystem& eigT) {
    if (eig0.dim() != eigT.dim() || state0.populations.size() != eig0.dim())
        throw InvalidArgument("dimension mismatch in adiabatic_work");
    double w = 0;
    for (std::size_t n = 0; n < eig0.dim(); ++n)
        w += state0.populations[n] * (eigT.eigenvalues[n].real() - eig0.eigenvalues[n].real());
    return w;
}

ModelSpec interpolate(const ModelSpec& a, const ModelSpec& b, double s) {
    if (a.kind != b.kind) throw InvalidArgument("cycle corners must share a model kind");
    auto lerp = [s](double x, double y) { return x + (y - x) * s; };
    ModelSpec m = a;
    switch (a.kind) {
        case ModelKind::TwoLevel:
            m.two_level.lambda = lerp(a.two_level.lambda, b.two_level.lambda);
            m.two_level.gamma = lerp(a.two_level.gamma, b.two_level.gamma);
            break;
        case ModelKind::Oscillator: m.oscillator.omega = lerp(a.oscillator.omega, b.oscillator.omega); break;
        case ModelKind::HatanoNelson:
            if (a.hatano_nelson.length != b.hatano_nelson.length)
                throw InvalidArgument("cycle corners must share the chain length");
            m.hatano_nelson.alpha = lerp(a.hatano_nelson.alpha, b.hatano_nelson.alpha);
            m.hatano_nelson.hopping = lerp(a.hatano_nelson.hopping, b.hatano_nelson.hopping);
            if (!b.hatano_nelson.potential.empty()) {
                auto& v = m.hatano_nelson.potential;
                v.resize(a.hatano_nelson.length, 0.0);
                for (std::size_t x = 0; x < v.size(); ++x) {
                    const double va = a.hatano_nelson.potential.empty() ? 0 : a.hatano_nelson.potential[x];
                    v[x] = lerp(va, b.hatano_nelson.potential[x]);
                }
            }
            break;
    }
    m.validate();
    return m;
}

namespace {

struct CycleSample {
    BiorthogonalEigensystem eig;
    MetricOperator g;
    ComplexMatrix H, rho;
    double beta, S, E;
};

double entropy_at(const std::vector<cplx>& eigs, double beta, double& max_imag) {
    const ThermalState st = thermal_state(eigs, beta);
    const cplx S = complex_entropy(st, eigs);
    max_imag = std::max(max_imag, std::abs(S.imag()));
    return real_or_throw(S, default_tolerances().reality, "entropy");
}

// S decreases monotonically in beta; bisect in log(beta)
double isentrope_beta(const std::vector<cplx>& eigs, double target, double& max_imag) {
    double lo = std::log(1e-6), hi = std::log(1e6);
    const double s_lo = entropy_at(eigs, std::exp(lo), max_imag), s_hi = entropy_at(eigs, std::exp(hi), max_imag);
    if (!(target <= s_lo && target >= s_hi)) {
        std::ostringstream os;
        os << "target entropy " << target << " outside the model's range [" << s_hi << ", " << s_lo << "]";
        throw IsentropeNotFound(os.str());
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = entropy_at(eigs, std::exp(mid), max_imag);
        if (std::abs(s - target) < 1e-10 * std::max(1.0, std::abs(target)) && it > 0) return std::exp(mid);
        (s > target ? lo : hi) = mid;
        if (hi - lo < 1e-15) break;
    }
    const double b = std::exp(0.5 * (lo + hi));
    if (std::abs(entropy_at(eigs, b, max_imag) - target) > 1e-8 * std::max(1.0, std::abs(target)))
        throw IsentropeNotFound("bisection did not reach the target entropy");
    return b;
}

CycleSample sample(const ModelSpec& m, double beta, double& max_imag) {
    CycleSample c;
    c.H = m.hamiltonian();
    c.eig = eigendecompose(c.H);
    if (classify_spectrum(c.eig.eigenvalues).kind == SpectrumKind::Generic)
        throw NonRealSpectrum("cycle leg leaves the pseudo-hermitian regime");
    if (auto g = m.analytic_metric())
        c.g = *g;
    else
        c.g = build_metric(c.eig);
    c.beta = beta;
    const ThermalState st = thermal_state(c.eig.eigenvalues, beta);
    const cplx E = complex_energy(st, c.eig.eigenvalues), S = complex_entropy(st, c.eig.eigenvalues);
    max_imag = std::max({max_imag, std::abs(E.imag()), std::abs(S.imag())});
    c.E = real_or_throw(E, default_tolerances().reality, "internal energy");
    c.S = real_or_throw(S, default_tolerances().reality, "entropy");
    c.rho = density_matrix(st, c.eig);
    return c;
}

}  // namespace

CycleReport quasistatic_cycle(const std::array<ModelSpec, 4>& corners, double T_hot, double T_cold,
                              std::size_t steps) {
    if (!(T_hot > T_cold) || !(T_cold > 0)) throw InvalidArgument("need T_hot > T_cold > 0");
    if (steps < 100) throw InvalidArgument("cycle needs at least 100 steps");
    for (const auto& c : corners) c.validate();

    CycleReport r;
    r.T_hot = T_hot;
    r.T_cold = T_cold;
    r.carnot_bound = 1 - T_cold / T_hot;
    const std::size_t per_leg = steps / 4;
    const double beta_h = 1 / T_hot, beta_c = 1 / T_cold;

    double heat[4] = {0, 0, 0, 0}, work = 0;
    double imag = 0;
    CycleSample prev = sample(corners[0], beta_h, imag);
    r.entropy_trace.push_back({0, 0, beta_h, prev.S, prev.E});

    auto advance = [&](int leg, double s, CycleSample next) {
        ComplexMatrix Hbar = prev.H + next.H, rhobar = prev.rho + next.rho;
        Hbar *= 0.5;
        rhobar *= 0.5;
        const cplx dQ = g_trace((next.rho - prev.rho) * Hbar, next.eig, next.g);
        const cplx dW = g_trace(rhobar * (next.H - prev.H), next.eig, next.g);
        imag = std::max({imag, std::abs(dQ.imag()), std::abs(dW.imag())});
        heat[leg] += dQ.real();
        work += dW.real();
        r.entropy_trace.push_back({leg, s, next.beta, next.S, next.E});
        prev = std::move(next);
    };

    for (int leg = 0; leg < 4; ++leg) {
        const ModelSpec& a = corners[leg];
        const ModelSpec& b = corners[(leg + 1) % 4];
        const bool isotherm = leg % 2 == 0;
        const double target = prev.S;
        for (std::size_t k = 1; k <= per_leg; ++k) {
            const double s = double(k) / double(per_leg);
            const ModelSpec m = interpolate(a, b, s);
            double beta = leg == 0 ? beta_h : beta_c;
            if (!isotherm) {
                const auto eig = eigendecompose(m.hamiltonian());
                beta = isentrope_beta(eig.eigenvalues, target, imag);
            }
            advance(leg, s, sample(m, beta, imag));
        }
        if (!isotherm) {
            const double want = leg == 1 ? T_cold : T_hot;
            const double got = 1 / prev.beta;
            if (std::abs(got - want) > 1e-6 * want) {
                std::ostringstream os;
                os << "isentrope " << (leg == 1 ? "B->C" : "D->A") << " ends at T = " << got << " instead of " << want;
                throw IsentropeNotFound(os.str());
            }
        }
    }

    r.Q_hot = heat[0];
    r.Q_cold = -heat[2];
    r.isentrope_heat = std::abs(heat[1]) + std::abs(heat[3]);
    r.W_net = -work;
    r.efficiency = r.W_net / r.Q_hot;
    r.first_law_residual = std::abs(r.W_net - (r.Q_hot - r.Q_cold));
    r.max_imag = imag;
    return r;
}

}  // namespace pt
