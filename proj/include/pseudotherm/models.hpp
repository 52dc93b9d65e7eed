#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pseudotherm/linalg.hpp"

namespace pt {

enum class ModelKind { TwoLevel, Oscillator, HatanoNelson };
enum class Boundary { Open, Periodic };

const char* to_string(ModelKind k);

struct TwoLevelParams {
    double lambda = 0;
    double gamma = 1;
};

struct OscillatorParams {
    double omega = 1;
    double xi = 0;
    double mass = 1;
    std::size_t n_basis = 40;
    double omega_ref = 0;  // <= 0: use omega
};

struct HatanoNelsonParams {
    std::size_t length = 4;
    double hopping = 1;
    double alpha = 0;
    std::vector<double> potential;  // empty: all zero
    Boundary boundary = Boundary::Open;
};

// Fixed position-grid representation of the truncated oscillator: the nodes
// are the eigenvalues of the truncated Fock-space X at omega_ref, so the
// potential is diagonal and e^{xi X} is an exact diagonal similarity.
struct OscillatorBasis {
    std::size_t n = 0;
    double omega_ref = 1, mass = 1, xi = 0;
    std::vector<double> nodes;
    ComplexMatrix fock_to_grid;  // columns: eigenvectors of X in the Fock basis
    ComplexMatrix kinetic;       // e^{-xi X} (P^2 / 2m) e^{xi X} on the grid
    ComplexMatrix x_fock, p_fock;
};

std::shared_ptr<const OscillatorBasis> make_oscillator_basis(std::size_t n, double omega_ref, double mass, double xi);

struct ModelSpec {
    ModelKind kind = ModelKind::TwoLevel;
    TwoLevelParams two_level;
    OscillatorParams oscillator;
    HatanoNelsonParams hatano_nelson;
    std::shared_ptr<const OscillatorBasis> basis;  // oscillator only

    static ModelSpec make_two_level(double lambda, double gamma = 1);
    static ModelSpec make_oscillator(const OscillatorParams& p);
    static ModelSpec make_hatano_nelson(const HatanoNelsonParams& p);

    void validate() const;
    std::size_t dimension() const;

    // the scalar a protocol drives: lambda, omega or alpha
    double control() const;
    ModelSpec with_control(double value) const;

    ComplexMatrix hamiltonian() const;
    // closed-form metric when the model has one (two-level, oscillator)
    std::optional<MetricOperator> analytic_metric() const;
    // d g / dt given d(control)/dt, when available in closed form
    std::optional<ComplexMatrix> analytic_metric_rate(double control_rate) const;
    // closed-form partition function (oscillator ladder)
    std::optional<double> analytic_partition_function(double beta) const;
};

ComplexMatrix build_two_level(double lambda, double gamma = 1);
// 2 [[1, -i l],[i l, 1]] with l = lambda / gamma
ComplexMatrix two_level_metric(double lambda, double gamma = 1);
// rows are left eigenvectors (E = +e, -e), V H V^-1 = diag, V^dagger V = metric
ComplexMatrix two_level_transform(double lambda, double gamma = 1);
double relaxation_time(double lambda_f);

ComplexMatrix build_oscillator(double omega, double xi, std::size_t n_basis, double omega_ref = 0, double mass = 1);
std::vector<double> oscillator_ladder(double omega, std::size_t count);

ComplexMatrix build_hatano_nelson(std::size_t L, double t, double alpha, const std::vector<double>& V,
                                  Boundary boundary);

}  // namespace pt
