#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pseudotherm/linalg.hpp"
#include "pseudotherm/models.hpp"

namespace pt {

enum class ProtocolKind { Linear, Erf, Tabulated };

struct Protocol {
    ProtocolKind kind = ProtocolKind::Linear;
    double start_value = 0;
    double end_value = 0;
    double duration = 1;
    double window = 1;                                // Erf: runs over [-window*tau, window*tau]
    std::vector<std::pair<double, double>> samples;  // Tabulated: (t, value)

    static Protocol linear(double from, double to, double tau);
    static Protocol erf(double from, double to, double tau, double window);
    static Protocol tabulated(std::vector<std::pair<double, double>> samples);
    static Protocol constant(double value, double tau);

    void validate() const;
    double t_begin() const;
    double t_end() const;
    double value(double t) const;  // OutOfRange outside the window
    double rate(double t) const;
};

ComplexMatrix hamiltonian_at(const ModelSpec& model, const Protocol& protocol, double t);

// -(i hbar / 2) g^-1 dg/dt
ComplexMatrix gauge_field(const MetricOperator& g, const ComplexMatrix& dg_dt, double hbar);

// metric and its time derivative along the protocol: closed form when the
// model has one, otherwise Eq.-(5) construction and a central difference
MetricOperator metric_at(const ModelSpec& model, const Protocol& protocol, double t);
ComplexMatrix metric_rate_at(const ModelSpec& model, const Protocol& protocol, double t);

// ||U^dagger g_t U - g_0||_F
double unitarity_residual(const ComplexMatrix& U, const MetricOperator& g0, const MetricOperator& gt);
// same, after scaling row/column j by g_0(j,j)^{-1/2}; equals the plain
// residual whenever g_0 has unit diagonal and stays meaningful for metrics
// with a large dynamic range
double scaled_unitarity_residual(const ComplexMatrix& U, const MetricOperator& g0, const MetricOperator& gt);

enum class Integrator { Rk4, Magnus4 };
const char* to_string(Integrator i);

struct PropagateOptions {
    double hbar = 1;
    std::size_t steps = 64;  // initial step count, doubled until converged
    std::size_t max_steps = std::size_t(1) << 20;
    double tolerance = 1e-8;            // step-halving change of any entry
    double unitarity_tolerance = 1e-8;  // every checkpoint
    std::size_t checkpoints = 10;
    Integrator integrator = Integrator::Rk4;
    std::optional<double> from, to;  // sub-window of the protocol
};

struct Checkpoint {
    double t;
    double residual;      // scaled
    double raw_residual;  // plain Frobenius norm
};

struct PropagationResult {
    ComplexMatrix U;
    std::vector<Checkpoint> checkpoints;
    std::size_t steps_used = 0;
    double step_size = 0;
    double convergence = 0;  // last step-halving change
    double t_begin = 0, t_end = 0;
    MetricOperator g0, gT;
};

PropagationResult propagate(const ModelSpec& model, const Protocol& protocol, const PropagateOptions& opt = {});

}  // namespace pt
