#include "pseudotherm/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pseudotherm/errors.hpp"
#include "pseudotherm/output.hpp"
#include "pseudotherm/thermo.hpp"

namespace pt {

bool RunSummary::ok() const {
    if (!error_kind.empty()) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string RunSummary::to_json() const {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["status"] = !error_kind.empty() ? "error" : ok() ? "pass" : "fail";
    j["config"] = config_hash;
    j["files"] = files;
    auto checks_json = nlohmann::ordered_json::array();
    auto failed = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["value"] = c.value;
        e["relation"] = c.relation;
        e["limit"] = c.limit;
        e["pass"] = c.pass;
        checks_json.push_back(e);
        if (!c.pass) failed.push_back(c.name);
    }
    j["checks"] = checks_json;
    j["failed"] = failed;
    j["warnings"] = warnings;
    nlohmann::ordered_json info_json = nlohmann::ordered_json::object();
    for (const auto& [k, v] : info) info_json[k] = v;
    j["info"] = info_json;
    if (!error_kind.empty()) j["error"] = {{"kind", error_kind}, {"message", error_message}};
    return j.dump(2);
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"spectrum", "metric",    "evolve",     "work",      "jarzynski",
                                            "carnot",   "fig1-left", "fig1-right", "fig2-left", "fig2-right"};
    return s;
}

namespace {

std::string fmt(double x) { return format_cell(x); }

std::string label(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Check make_check(std::string name, double value, const std::string& rel, double limit) {
    bool pass = false;
    if (rel == "<") pass = value < limit;
    if (rel == "<=") pass = value <= limit;
    if (rel == ">") pass = value > limit;
    if (rel == ">=") pass = value >= limit;
    return {std::move(name), value, rel, limit, pass && std::isfinite(value)};
}

struct Context {
    const ExperimentConfig& cfg;
    const RunOptions& opt;
    RunSummary& sum;
    std::vector<std::pair<std::string, std::string>> provenance_extra;

    void check(std::string name, double value, const std::string& rel, double limit) {
        sum.checks.push_back(make_check(std::move(name), value, rel, limit));
    }

    void emit(const std::string& stem, const Table& t, const PlotOptions& plot) {
        const std::filesystem::path dir(opt.output_directory);
        const std::string csv = stem + ".csv";
        write_text((dir / csv).string(),
                   format_csv(t, provenance_line(cfg.hash, cfg.seed, provenance_extra)));
        sum.files.push_back(csv);
        if (opt.svg) {
            const std::string svg = stem + ".svg";
            write_text((dir / svg).string(), render_svg(t, plot));
            sum.files.push_back(svg);
        }
    }

    void emit_text(const std::string& name, const std::string& content) {
        write_text((std::filesystem::path(opt.output_directory) / name).string(), content);
        sum.files.push_back(name);
    }

    const ModelSpec& model() const {
        if (!cfg.model) throw ConfigError("field 'model': required by this subcommand");
        return *cfg.model;
    }
    const Protocol& protocol() const {
        if (!cfg.protocol) throw ConfigError("field 'protocol': required by this subcommand");
        return *cfg.protocol;
    }
    const SweepSpec& sweep() const {
        if (!cfg.sweep) throw ConfigError("field 'sweep': required by this subcommand");
        return *cfg.sweep;
    }
};

// rethrow with the failing parameter point attached, keeping the kind
[[noreturn]] void rethrow_at(const Error& e, const std::string& point) {
    std::string msg = e.what();
    const std::string prefix = e.kind() + ": ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    throw Error(e.kind(), msg + " [at " + point + "]");
}

template <class F>
auto at_point(const std::string& point, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        rethrow_at(e, point);
    }
}

Protocol with_sweep(Protocol p, const std::string& name, double v) {
    if (name == "tau") {
        if (p.kind == ProtocolKind::Tabulated) throw ConfigError("sweep 'tau' needs a linear or erf protocol");
        p.duration = v;
    } else if (name == "lambda_f") {
        if (p.kind == ProtocolKind::Tabulated) throw ConfigError("sweep 'lambda_f' needs a linear or erf protocol");
        p.end_value = v;
    }
    p.validate();
    return p;
}

ComplexMatrix input_hamiltonian(const Context& c) {
    if (!c.cfg.matrix_file.empty()) return read_matrix_file(c.cfg.matrix_file);
    return c.model().hamiltonian();
}

double biorthonormality_error(const BiorthogonalEigensystem& e) {
    double m = 0;
    for (std::size_t a = 0; a < e.dim(); ++a)
        for (std::size_t b = 0; b < e.dim(); ++b)
            m = std::max(m, std::abs(dotc(e.left[a], e.right[b]) - (a == b ? 1.0 : 0.0)));
    return m;
}

void run_spectrum(Context& c) {
    const ComplexMatrix H = input_hamiltonian(c);
    const auto eig = eigendecompose(H);
    const auto cls = classify_spectrum(eig.eigenvalues);
    Table t{{"index", "re", "im"}, {}};
    for (std::size_t k = 0; k < eig.dim(); ++k)
        t.add({std::int64_t(k), eig.eigenvalues[k].real(), eig.eigenvalues[k].imag()});
    c.emit("spectrum", t, {"spectrum", "index", "E", false, true});
    c.sum.info.emplace_back("dimension", std::to_string(eig.dim()));
    c.sum.info.emplace_back("class", to_string(cls.kind));
    c.sum.info.emplace_back("overlap_condition", fmt(eig.overlap_condition));
    c.check("biorthonormality", biorthonormality_error(eig), "<", c.cfg.limits.biorthonormality);
}

void run_metric(Context& c) {
    const ComplexMatrix H = input_hamiltonian(c);
    const auto eig = eigendecompose(H);
    const MetricOperator g = build_metric(eig);
    Table t{{"row", "col", "re", "im"}, {}};
    for (std::size_t i = 0; i < g.g.dim(); ++i)
        for (std::size_t j = 0; j < g.g.dim(); ++j)
            t.add({std::int64_t(i), std::int64_t(j), g.g(i, j).real(), g.g(i, j).imag()});
    c.emit("metric", t, {"metric entries", "row", "", false, true});
    c.emit_text("metric.txt", format_matrix(g.g));
    c.sum.info.emplace_back("class", to_string(classify_spectrum(eig.eigenvalues).kind));
    c.sum.info.emplace_back("positive_definite", g.positive_definite ? "true" : "false");
    c.sum.info.emplace_back("min_eigenvalue", fmt(g.min_eigenvalue));
    const double scale = std::max(1e-300, H.frobenius_norm() * g.g.frobenius_norm());
    c.check("pseudo_hermiticity_relative", pseudo_hermiticity_residual(H, g) / scale, "<",
            c.cfg.limits.pseudo_hermiticity);
}

void run_evolve(Context& c) {
    const auto res = propagate(c.model(), c.protocol(), c.cfg.propagation);
    Table t{{"t", "residual", "raw_residual"}, {}};
    for (const auto& cp : res.checkpoints) t.add({cp.t, cp.residual, cp.raw_residual});
    c.emit("evolve", t, {"unitarity residual at checkpoints", "t", "residual", false, true});
    c.emit_text("propagator.txt", format_matrix(res.U));
    c.sum.info.emplace_back("steps_used", std::to_string(res.steps_used));
    c.sum.info.emplace_back("step_size", fmt(res.step_size));
    c.sum.info.emplace_back("integrator", to_string(c.cfg.propagation.integrator));
    c.check("step_halving_change", res.convergence, "<", c.cfg.propagation.tolerance);
    double worst = 0;
    for (const auto& cp : res.checkpoints) worst = std::max(worst, cp.residual);
    c.check("max_checkpoint_residual", worst, "<", c.cfg.propagation.unitarity_tolerance);
    c.check("checkpoint_count", double(res.checkpoints.size()), ">=", 10);
}

void two_time_checks(Context& c, const TwoTimeResult& r, const std::string& tag) {
    c.check(tag + "probability_total_error", std::abs(r.work.total() - 1), "<", c.cfg.limits.probability);
    c.check(tag + "row_sum_error", r.max_row_error, "<", c.cfg.limits.row_sum);
    if (c.cfg.model && c.cfg.model->kind == ModelKind::Oscillator && r.tail_mass >= c.cfg.limits.tail_mass)
        c.sum.warnings.push_back(tag + "Gibbs weight of the top five levels is " + fmt(r.tail_mass) +
                                 "; the truncated basis may be too small");
}

void run_work(Context& c) {
    const auto r = two_time_measurement(c.model(), c.protocol(), c.cfg.beta, c.cfg.propagation);
    Table t{{"n", "m", "w", "p"}, {}};
    for (const auto& e : r.work.entries) t.add({std::int64_t(e.n), std::int64_t(e.m), e.w, e.p});
    c.emit("work", t, {"work distribution", "n", "", false, true});
    c.sum.info.emplace_back("Z0", fmt(r.work.Z0));
    c.sum.info.emplace_back("Ztau", fmt(r.work.Ztau));
    c.sum.info.emplace_back("steps_used", std::to_string(r.propagation.steps_used));
    two_time_checks(c, r, "");
    double pmin = 0;
    for (const auto& e : r.work.entries) pmin = std::min(pmin, e.p);
    c.check("min_probability", pmin, ">=", 0);
}

void run_jarzynski(Context& c) {
    const Protocol& base = c.protocol();
    std::vector<double> keys{0};
    std::string key_name = "run";
    if (c.cfg.sweep) {
        keys = c.sweep().values;
        key_name = c.sweep().name;
        c.provenance_extra.emplace_back("sweep", c.sweep().description);
    }
    auto results = parallel_map<TwoTimeResult>(keys.size(), c.opt.workers, [&](std::size_t i) {
        const std::string point = key_name + "=" + label(keys[i]);
        return at_point(point, [&] {
            double beta = c.cfg.beta;
            Protocol p = base;
            if (key_name == "beta")
                beta = keys[i];
            else if (key_name != "run")
                p = with_sweep(base, key_name, keys[i]);
            return two_time_measurement(c.model(), p, beta, c.cfg.propagation);
        });
    });
    Table t{{key_name, "exp_avg_work", "exp_delta_F", "relative_residual", "mean_work", "delta_F",
             "irreversible_work", "steps"},
            {}};
    double worst = 0, wmin = 1e300;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto& r = results[i].report;
        t.add({keys[i], r.exp_avg_work, r.exp_delta_F, r.relative_residual, r.mean_work, r.delta_F,
               r.irreversible_work, std::int64_t(results[i].propagation.steps_used)});
        worst = std::max(worst, r.relative_residual);
        wmin = std::min(wmin, r.irreversible_work);
        two_time_checks(c, results[i], keys.size() > 1 ? key_name + "=" + label(keys[i]) + ":" : "");
    }
    c.emit("jarzynski", t, {"Jarzynski equality", key_name, "", key_name == "tau", false});
    c.check("max_relative_residual", worst, "<", c.cfg.limits.jarzynski);
    c.check("min_irreversible_work", wmin, ">=", c.cfg.limits.w_irr_floor);
}

void run_carnot(Context& c) {
    if (!c.cfg.cycle) throw ConfigError("field 'cycle': required by this subcommand");
    const CycleSpec& cy = *c.cfg.cycle;
    const auto r = quasistatic_cycle(cy.corners, cy.T_hot, cy.T_cold, cy.steps);
    Table t{{"step", "leg", "s", "beta", "entropy", "energy"}, {}};
    for (std::size_t k = 0; k < r.entropy_trace.size(); ++k) {
        const auto& p = r.entropy_trace[k];
        t.add({std::int64_t(k), std::int64_t(p.leg), p.s, p.beta, p.entropy, p.energy});
    }
    c.emit("carnot", t, {"cycle trace", "step", "", false, false});
    Table s{{"T_hot", "T_cold", "Q_hot", "Q_cold", "W_net", "efficiency", "carnot_bound", "first_law_residual",
             "isentrope_heat"},
            {}};
    s.add({r.T_hot, r.T_cold, r.Q_hot, r.Q_cold, r.W_net, r.efficiency, r.carnot_bound, r.first_law_residual,
           r.isentrope_heat});
    c.emit("carnot_summary", s, {"cycle summary", "T_hot", "", false, true});
    c.check("efficiency_gap", std::abs(r.efficiency - r.carnot_bound), "<", c.cfg.limits.carnot);
    c.check("efficiency_excess", r.efficiency - r.carnot_bound, "<=", c.cfg.limits.carnot_excess);
    c.check("first_law_relative", r.first_law_residual / std::abs(r.Q_hot), "<", c.cfg.limits.first_law);
    c.check("max_imaginary_part", r.max_imag, "<", default_tolerances().reality);
}

void run_fig1_left(Context& c) {
    const ModelSpec& m = c.model();
    const Protocol& p = c.protocol();
    if (m.kind != ModelKind::Oscillator) throw ConfigError("field 'model.kind': fig1-left needs the oscillator");
    const auto r = two_time_measurement(m, p, c.cfg.beta, c.cfg.propagation);
    const double wi = m.with_control(p.start_value).oscillator.omega, wf = p.end_value;
    const double Z0 = *m.with_control(wi).analytic_partition_function(c.cfg.beta);
    const double target = *m.with_control(wf).analytic_partition_function(c.cfg.beta) / Z0;
    // the top of a truncated basis is not a faithful ladder; sum below it
    const std::size_t guard = m.dimension() - m.dimension() / 8;
    std::vector<std::size_t> nmax = c.cfg.n_max;
    if (nmax.empty())
        for (std::size_t k = 1; k <= guard; ++k) nmax.push_back(k);
    std::sort(nmax.begin(), nmax.end());
    if (nmax.back() > guard) {
        c.sum.warnings.push_back("n_max above " + std::to_string(guard) + " reaches into the basis edge; clipped");
        for (auto& n : nmax) n = std::min(n, guard);
        nmax.erase(std::unique(nmax.begin(), nmax.end()), nmax.end());
    }
    Table t{{"n_max", "partial_exp_work", "exp_delta_F", "relative_error"}, {}};
    double last = 0;
    for (auto n : nmax) {
        last = exp_work_partial_sum(r.transitions, r.eigT, c.cfg.beta, Z0, n);
        t.add({std::int64_t(n), last, target, std::abs(last - target) / target});
    }
    c.emit("fig1_left", t, {"average exponentiated work, partial sums", "N_max", "", false, false});
    c.sum.info.emplace_back("exp_delta_F", fmt(target));
    c.sum.info.emplace_back("finite_model_jarzynski_residual", fmt(r.report.relative_residual));
    c.sum.info.emplace_back("steps_used", std::to_string(r.propagation.steps_used));
    two_time_checks(c, r, "");
    c.check("final_partial_sum_relative_error", std::abs(last - target) / target, "<", c.cfg.limits.partial_sum);
    c.check("finite_model_jarzynski_residual", r.report.relative_residual, "<", c.cfg.limits.jarzynski);
}

void run_fig1_right(Context& c) {
    const ModelSpec& m = c.model();
    const Protocol& erf = c.protocol();
    const SweepSpec& sw = c.sweep();
    if (sw.name != "tau") throw ConfigError("field 'sweep.name': fig1-right sweeps tau");
    if (erf.kind != ProtocolKind::Erf) throw ConfigError("field 'protocol.kind': fig1-right needs the erf protocol");
    c.provenance_extra.emplace_back("sweep", sw.description);
    const std::size_t n = sw.values.size();
    // tasks 0..n-1: erf, n..2n-1: linear over [0, tau]
    auto results = parallel_map<TwoTimeResult>(2 * n, c.opt.workers, [&](std::size_t i) {
        const double tau = sw.values[i % n];
        const bool linear = i >= n;
        const std::string point = std::string(linear ? "linear" : "erf") + " tau=" + label(tau);
        return at_point(point, [&] {
            const Protocol p = linear ? Protocol::linear(erf.start_value, erf.end_value, tau) : with_sweep(erf, "tau", tau);
            return two_time_measurement(m, p, c.cfg.beta, c.cfg.propagation);
        });
    });
    Table t{{"tau", "w_irr_erf", "w_irr_linear", "excess_over_adiabatic_erf", "excess_over_adiabatic_linear",
             "jarzynski_residual_erf", "jarzynski_residual_linear"},
            {}};
    double wmin = 1e300, jmax = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& e = results[k];
        const auto& l = results[n + k];
        t.add({sw.values[k], e.report.irreversible_work, l.report.irreversible_work,
               e.report.mean_work - e.adiabatic_work, l.report.mean_work - l.adiabatic_work,
               e.report.relative_residual, l.report.relative_residual});
        wmin = std::min({wmin, e.report.irreversible_work, l.report.irreversible_work});
        jmax = std::max({jmax, e.report.relative_residual, l.report.relative_residual});
    }
    for (std::size_t i = 0; i < 2 * n; ++i)
        two_time_checks(c, results[i], std::string(i >= n ? "linear" : "erf") + " tau=" + label(sw.values[i % n]) + ":");
    c.emit("fig1_right", t, {"irreversible work vs tau", "tau", "", true, false});
    const std::size_t lo = std::size_t(std::min_element(sw.values.begin(), sw.values.end()) - sw.values.begin());
    const std::size_t hi = std::size_t(std::max_element(sw.values.begin(), sw.values.end()) - sw.values.begin());
    c.check("min_irreversible_work", wmin, ">=", c.cfg.limits.w_irr_floor);
    c.check("w_irr_erf_at_largest_tau", results[hi].report.irreversible_work, "<", c.cfg.limits.w_irr_quasistatic);
    c.check("linear_minus_erf_at_smallest_tau",
            results[n + lo].report.irreversible_work - results[lo].report.irreversible_work, ">", 0);
    c.check("max_jarzynski_residual", jmax, "<", c.cfg.limits.jarzynski);
    c.sum.info.emplace_back("adiabatic_limit_w_irr_erf",
                            fmt(results[hi].adiabatic_work - results[hi].report.delta_F));
}

void run_fig2_left(Context& c) {
    const ModelSpec& m = c.model();
    if (m.kind != ModelKind::TwoLevel) throw ConfigError("field 'model.kind': fig2-left needs the two-level model");
    const SweepSpec& sw = c.sweep();
    if (sw.name != "lambda_f") throw ConfigError("field 'sweep.name': fig2-left sweeps lambda_f");
    c.provenance_extra.emplace_back("sweep", sw.description);
    const Protocol& base = c.protocol();
    struct Point {
        double tr, analytic;
        TwoTimeResult r;
    };
    auto pts = parallel_map<Point>(sw.values.size(), c.opt.workers, [&](std::size_t i) {
        const double lf = sw.values[i];
        return at_point("lambda_f=" + label(lf), [&] {
            const double gamma = m.two_level.gamma;
            const auto e = eigendecompose(build_two_level(lf, gamma));
            const double tr = 1 / std::abs(e.eigenvalues[1] - e.eigenvalues[0]);
            const double l = lf / gamma;
            return Point{tr, 1 / (2 * gamma * std::sqrt(1 - l * l)),
                         two_time_measurement(m, with_sweep(base, "lambda_f", lf), c.cfg.beta, c.cfg.propagation)};
        });
    });
    Table t{{"lambda_f", "T_r", "T_r_analytic", "jarzynski_residual"}, {}};
    double dmax = 0, jmax = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t.add({sw.values[i], pts[i].tr, pts[i].analytic, pts[i].r.report.relative_residual});
        dmax = std::max(dmax, std::abs(pts[i].tr - pts[i].analytic));
        jmax = std::max(jmax, pts[i].r.report.relative_residual);
        two_time_checks(c, pts[i].r, "lambda_f=" + label(sw.values[i]) + ":");
    }
    c.emit("fig2_left", t, {"relaxation time", "lambda_f", "", false, false});
    c.check("max_relaxation_time_error", dmax, "<", c.cfg.limits.relaxation);
    c.check("relaxation_ratio_0.99_over_0.2", relaxation_time(0.99) / relaxation_time(0.2), ">", 6);
    c.check("max_jarzynski_residual", jmax, "<", c.cfg.limits.jarzynski);
}

void run_fig2_right(Context& c) {
    std::mt19937_64 rng(c.cfg.seed);
    std::normal_distribution<double> normal;
    c.provenance_extra.emplace_back("rng", "mt19937_64+normal");
    const ComplexMatrix sx{{0, 1}, {1, 0}};
    const MetricOperator g = MetricOperator::from(sx);
    Table t{{"n", "norm", "psi0_re", "psi0_im", "psi1_re", "psi1_im"}, {}};
    std::size_t pos = 0, neg = 0;
    for (std::size_t n = 0; n < c.cfg.samples; ++n) {
        CVector v(2);
        for (auto& x : v) {
            const double re = normal(rng);
            const double im = normal(rng);
            x = cplx(re, im);
        }
        const double nrm = norm2(v);
        for (auto& x : v) x /= nrm;
        const double q = g_inner(v, v, g).real();
        (q > 0 ? pos : neg) += 1;
        t.add({std::int64_t(n), q, v[0].real(), v[0].imag(), v[1].real(), v[1].imag()});
    }
    c.emit("fig2_right", t, {"sigma_x norm of random states", "n", "", false, true});
    c.check("positive_norms", double(pos), ">=", 1);
    c.check("negative_norms", double(neg), ">=", 1);
    // the two-time scheme must refuse to cross the exceptional point
    double refused = 0;
    try {
        propagate(ModelSpec::make_two_level(0), Protocol::linear(0, 1.2, 1), c.cfg.propagation);
    } catch (const SingularMetric&) {
        refused = 1;
    }
    c.check("propagation_across_exceptional_point_refused", refused, ">=", 1);
}

}  // namespace

RunSummary run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options) {
    RunSummary sum;
    sum.subcommand = subcommand;
    sum.config_hash = config.hash;
    Context c{config, options, sum, {}};
    if (subcommand == "spectrum")
        run_spectrum(c);
    else if (subcommand == "metric")
        run_metric(c);
    else if (subcommand == "evolve")
        run_evolve(c);
    else if (subcommand == "work")
        run_work(c);
    else if (subcommand == "jarzynski")
        run_jarzynski(c);
    else if (subcommand == "carnot")
        run_carnot(c);
    else if (subcommand == "fig1-left")
        run_fig1_left(c);
    else if (subcommand == "fig1-right")
        run_fig1_right(c);
    else if (subcommand == "fig2-left")
        run_fig2_left(c);
    else if (subcommand == "fig2-right")
        run_fig2_right(c);
    else
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    return sum;
}

}  // namespace pt
