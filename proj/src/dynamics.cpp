#include "pseudotherm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pseudotherm/errors.hpp"

namespace pt {

Protocol Protocol::linear(double from, double to, double tau) {
    Protocol p;
    p.kind = ProtocolKind::Linear;
    p.start_value = from;
    p.end_value = to;
    p.duration = tau;
    p.validate();
    return p;
}

Protocol Protocol::erf(double from, double to, double tau, double window) {
    Protocol p;
    p.kind = ProtocolKind::Erf;
    p.start_value = from;
    p.end_value = to;
    p.duration = tau;
    p.window = window;
    p.validate();
    return p;
}

Protocol Protocol::tabulated(std::vector<std::pair<double, double>> samples) {
    Protocol p;
    p.kind = ProtocolKind::Tabulated;
    p.samples = std::move(samples);
    if (!p.samples.empty()) {
        p.start_value = p.samples.front().second;
        p.end_value = p.samples.back().second;
        p.duration = p.samples.back().first - p.samples.front().first;
    }
    p.validate();
    return p;
}

Protocol Protocol::constant(double value, double tau) { return linear(value, value, tau); }

void Protocol::validate() const {
    if (kind == ProtocolKind::Tabulated) {
        if (samples.size() < 2) throw InvalidArgument("tabulated protocol needs at least two samples");
        for (std::size_t k = 1; k < samples.size(); ++k)
            if (!(samples[k].first > samples[k - 1].first))
                throw InvalidArgument("tabulated protocol times must be strictly increasing");
        return;
    }
    if (!(duration > 0) || !std::isfinite(duration)) throw InvalidArgument("protocol duration must be > 0");
    if (!std::isfinite(start_value) || !std::isfinite(end_value))
        throw InvalidArgument("protocol endpoints must be finite");
    if (kind == ProtocolKind::Erf && !(window > 0)) throw InvalidArgument("erf window must be > 0");
}

double Protocol::t_begin() const {
    switch (kind) {
        case ProtocolKind::Linear: return 0;
        case ProtocolKind::Erf: return -window * duration;
        case ProtocolKind::Tabulated: return samples.front().first;
    }
    return 0;
}

double Protocol::t_end() const {
    switch (kind) {
        case ProtocolKind::Linear: return duration;
        case ProtocolKind::Erf: return window * duration;
        case ProtocolKind::Tabulated: return samples.back().first;
    }
    return 0;
}

namespace {

void check_range(const Protocol& p, double t) {
    const double a = p.t_begin(), b = p.t_end();
    const double slack = 1e-12 * std::max(1.0, std::abs(b - a));
    if (!(t >= a - slack && t <= b + slack)) {
        std::ostringstream os;
        os << "t = " << t << " outside protocol window [" << a << ", " << b << "]";
        throw OutOfRange(os.str());
    }
}

std::size_t segment(const Protocol& p, double t) {
    auto it = std::upper_bound(p.samples.begin(), p.samples.end(), t,
                               [](double v, const std::pair<double, double>& s) { return v < s.first; });
    std::size_t k = it == p.samples.begin() ? 0 : std::size_t(it - p.samples.begin()) - 1;
    return std::min(k, p.samples.size() - 2);
}

}  // namespace

// The erf ramp is rescaled by erf(N) so the window edges sit exactly on the
// nominal start and end values.
double Protocol::value(double t) const {
    check_range(*this, t);
    t = std::clamp(t, t_begin(), t_end());
    switch (kind) {
        case ProtocolKind::Linear: return start_value + (end_value - start_value) * t / duration;
        case ProtocolKind::Erf: {
            if (t == t_begin()) return start_value;
            if (t == t_end()) return end_value;
            return 0.5 * (start_value + end_value) +
                   0.5 * (end_value - start_value) * std::erf(t / duration) / std::erf(window);
        }
        case ProtocolKind::Tabulated: {
            const std::size_t k = segment(*this, t);
            const auto& [t0, v0] = samples[k];
            const auto& [t1, v1] = samples[k + 1];
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    return 0;
}

double Protocol::rate(double t) const {
    check_range(*this, t);
    t = std::clamp(t, t_begin(), t_end());
    switch (kind) {
        case ProtocolKind::Linear: return (end_value - start_value) / duration;
        case ProtocolKind::Erf: {
            const double x = t / duration;
            return 0.5 * (end_value - start_value) * (2 / std::sqrt(M_PI)) * std::exp(-x * x) /
                   (duration * std::erf(window));
        }
        case ProtocolKind::Tabulated: {
            const std::size_t k = segment(*this, t);
            return (samples[k + 1].second - samples[k].second) / (samples[k + 1].first - samples[k].first);
        }
    }
    return 0;
}

ComplexMatrix hamiltonian_at(const ModelSpec& model, const Protocol& protocol, double t) {
    return model.with_control(protocol.value(t)).hamiltonian();
}

ComplexMatrix gauge_field(const MetricOperator& g, const ComplexMatrix& dg_dt, double hbar) {
    if (g.g_inverse.dim() == 0 || g.g_inverse.dim() != dg_dt.dim() || !g.g_inverse.all_finite())
        throw SingularMetric("gauge field needs an invertible metric");
    ComplexMatrix G = g.g_inverse * dg_dt;
    G *= cplx(0, -0.5 * hbar);
    return G;
}

namespace {

MetricOperator metric_for(const ModelSpec& m) {
    if (auto g = m.analytic_metric()) return *g;
    return build_metric(eigendecompose(m.hamiltonian()));
}

}  // namespace

MetricOperator metric_at(const ModelSpec& model, const Protocol& protocol, double t) {
    return metric_for(model.with_control(protocol.value(t)));
}

ComplexMatrix metric_rate_at(const ModelSpec& model, const Protocol& protocol, double t) {
    const double lam = protocol.value(t), rate = protocol.rate(t);
    const ModelSpec here = model.with_control(lam);
    if (auto r = here.analytic_metric_rate(rate)) return *r;
    // central difference in time, h = 1e-6 tau, through the control value
    const double h = 1e-6 * protocol.duration;
    ComplexMatrix d = metric_for(model.with_control(lam + rate * h)).g - metric_for(model.with_control(lam - rate * h)).g;
    d *= 1 / (2 * h);
    return d;
}

double unitarity_residual(const ComplexMatrix& U, const MetricOperator& g0, const MetricOperator& gt) {
    return (U.adjoint() * gt.g * U - g0.g).frobenius_norm();
}

double scaled_unitarity_residual(const ComplexMatrix& U, const MetricOperator& g0, const MetricOperator& gt) {
    ComplexMatrix R = U.adjoint() * gt.g * U - g0.g;
    const std::size_t n = R.dim();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            s += std::norm(R(i, j)) / (std::abs(g0.g(i, i)) * std::abs(g0.g(j, j)));
    return std::sqrt(s);
}

const char* to_string(Integrator i) { return i == Integrator::Rk4 ? "rk4" : "magnus4"; }

namespace {

struct Generator {
    const ModelSpec& model;
    const Protocol& protocol;
    double hbar;

    // -(i/hbar)(H + G)
    ComplexMatrix operator()(double t) const {
        const double lam = protocol.value(t);
        const ModelSpec here = model.with_control(lam);
        ComplexMatrix K = here.hamiltonian();
        const MetricOperator g = metric_for(here);
        if (!g.positive_definite) {
            std::ostringstream os;
            os << "metric is not positive definite at t = " << t << " (control = " << lam << ")";
            throw SingularMetric(os.str());
        }
        const ComplexMatrix dg = metric_rate_at(model, protocol, t);
        if (dg.max_abs() > 0) K += gauge_field(g, dg, hbar);
        K *= cplx(0, -1 / hbar);
        return K;
    }
};

struct Run {
    ComplexMatrix U;
    std::vector<Checkpoint> checkpoints;
};

Run integrate(const Generator& K, double t0, double t1, std::size_t n, Integrator method, std::size_t ncheck,
              const MetricOperator& g0, const ModelSpec& model, const Protocol& protocol) {
    const std::size_t dim = model.dimension();
    const double h = (t1 - t0) / double(n);
    Run run{ComplexMatrix::identity(dim), {}};
    std::vector<std::size_t> marks;
    for (std::size_t j = 1; j <= ncheck; ++j) marks.push_back((j * n + (ncheck + 1) / 2) / (ncheck + 1));
    std::size_t next_mark = 0;

    ComplexMatrix Ka = K(t0);
    static const double c1 = 0.5 - std::sqrt(3.0) / 6, c2 = 0.5 + std::sqrt(3.0) / 6;
    static const double b1 = 0.25 + std::sqrt(3.0) / 6, b2 = 0.25 - std::sqrt(3.0) / 6;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + h * double(k);
        const double tn = (k + 1 == n) ? t1 : t0 + h * double(k + 1);
        ComplexMatrix& U = run.U;
        if (method == Integrator::Rk4) {
            const ComplexMatrix Km = K(t + 0.5 * h);
            const ComplexMatrix Kb = K(tn);
            ComplexMatrix k1 = Ka * U;
            ComplexMatrix tmp = U;
            tmp.add_scaled(0.5 * h, k1);
            ComplexMatrix k2 = Km * tmp;
            tmp = U;
            tmp.add_scaled(0.5 * h, k2);
            ComplexMatrix k3 = Km * tmp;
            tmp = U;
            tmp.add_scaled(h, k3);
            ComplexMatrix k4 = Kb * tmp;
            U.add_scaled(h / 6, k1);
            U.add_scaled(h / 3, k2);
            U.add_scaled(h / 3, k3);
            U.add_scaled(h / 6, k4);
            Ka = Kb;
        } else {
            const ComplexMatrix K1 = K(t + c1 * h), K2 = K(t + c2 * h);
            ComplexMatrix A = cplx(b1 * h) * K1;
            A.add_scaled(b2 * h, K2);
            ComplexMatrix B = cplx(b2 * h) * K1;
            B.add_scaled(b1 * h, K2);
            U = expm(B) * (expm(A) * U);
        }
        if (next_mark < marks.size() && k + 1 == marks[next_mark]) {
            while (next_mark < marks.size() && marks[next_mark] == k + 1) ++next_mark;
            const MetricOperator gt = metric_at(model, protocol, tn);
            run.checkpoints.push_back({tn, scaled_unitarity_residual(U, g0, gt), unitarity_residual(U, g0, gt)});
        }
    }
    return run;
}

// step-halving change measured in the metric-scaled frame
double scaled_change(const ComplexMatrix& a, const ComplexMatrix& b, const MetricOperator& g0,
                     const MetricOperator& gT) {
    double m = 0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j)
            m = std::max(m, std::abs(a(i, j) - b(i, j)) * std::sqrt(std::abs(gT.g(i, i)) / std::abs(g0.g(j, j))));
    return m;
}

}  // namespace

PropagationResult propagate(const ModelSpec& model, const Protocol& protocol, const PropagateOptions& opt) {
    protocol.validate();
    if (opt.steps < 1) throw InvalidArgument("steps must be >= 1");
    if (!(opt.hbar > 0)) throw InvalidArgument("hbar must be > 0");
    const double t0 = opt.from.value_or(protocol.t_begin());
    const double t1 = opt.to.value_or(protocol.t_end());
    protocol.value(t0);
    protocol.value(t1);
    if (!(t1 > t0)) throw InvalidArgument("propagation window is empty");

    // refuse early if the metric loses positivity anywhere on the window
    for (int k = 0; k <= 256; ++k) {
        const double t = t0 + (t1 - t0) * k / 256.0;
        MetricOperator g;
        try {
            g = metric_at(model, protocol, t);
        } catch (const Defective& e) {
            throw SingularMetric(std::string("metric unavailable along the protocol: ") + e.what());
        }
        if (!g.positive_definite) {
            std::ostringstream os;
            os << "metric is not positive definite at t = " << t << " (control = " << protocol.value(t)
               << "); the two-time scheme needs the unbroken regime";
            throw SingularMetric(os.str());
        }
    }

    const Generator K{model, protocol, opt.hbar};
    PropagationResult res;
    res.t_begin = t0;
    res.t_end = t1;
    res.g0 = metric_at(model, protocol, t0);
    res.gT = metric_at(model, protocol, t1);

    const std::size_t ncheck = std::max<std::size_t>(opt.checkpoints, 10);
    std::size_t n = std::max(opt.steps, ncheck + 1);
    Run prev = integrate(K, t0, t1, n, opt.integrator, ncheck, res.g0, model, protocol);
    for (;;) {
        if (2 * n > opt.max_steps) {
            std::ostringstream os;
            os << "step halving did not reach " << opt.tolerance << " within " << opt.max_steps
               << " steps (last change " << res.convergence << ")";
            throw NotConverged(os.str());
        }
        Run cur = integrate(K, t0, t1, 2 * n, opt.integrator, ncheck, res.g0, model, protocol);
        n *= 2;
        res.convergence = scaled_change(prev.U, cur.U, res.g0, res.gT);
        bool unitary = true;
        for (const auto& c : cur.checkpoints) unitary &= c.residual < opt.unitarity_tolerance;
        if (res.convergence < opt.tolerance && unitary) {
            res.U = std::move(cur.U);
            res.checkpoints = std::move(cur.checkpoints);
            res.steps_used = n;
            res.step_size = (t1 - t0) / double(n);
            return res;
        }
        prev = std::move(cur);
    }
}

}  // namespace pt
