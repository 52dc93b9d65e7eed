#pragma once

#include <array>
#include <string>
#include <vector>

#include "pseudotherm/dynamics.hpp"
#include "pseudotherm/linalg.hpp"
#include "pseudotherm/models.hpp"

namespace pt {

cplx partition_function(const std::vector<cplx>& eigs, double beta);
double free_energy(cplx Z, double beta, double tol = default_tolerances().reality);

struct ThermalState {
    double beta = 1;
    std::vector<cplx> weights;        // e^{-beta E_n} / Z
    std::vector<double> populations;  // real parts of the weights
    cplx Z;
    cplx F;
    // Z = e^{-beta shift} * reduced_Z, kept separately so large beta does not overflow
    double shift = 0;
    cplx reduced_Z;
};

ThermalState thermal_state(const std::vector<cplx>& eigs, double beta);

// both raise NonRealResult when the imaginary part exceeds tol * max(1, |value|)
double internal_energy(const ThermalState& state, const std::vector<cplx>& eigs,
                       double tol = default_tolerances().reality);
double entropy(const ThermalState& state, const std::vector<cplx>& eigs, double tol = default_tolerances().reality);

// summed population of the top `count` levels
double tail_mass(const ThermalState& state, std::size_t count = 5);

// psi_n phi_n^dagger
ComplexMatrix projector(std::size_t n, const BiorthogonalEigensystem& eig);
// sum_n w_n Pi_n
ComplexMatrix density_matrix(const ThermalState& state, const BiorthogonalEigensystem& eig);

struct TransitionMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> overlap;  // |<psi_m^tau, g_tau U psi_n>|^2, metric-normalized states
    std::vector<double> p;        // population_n * overlap

    double at(std::size_t n, std::size_t m) const { return p[n * cols + m]; }
    double overlap_at(std::size_t n, std::size_t m) const { return overlap[n * cols + m]; }
    double row_overlap_sum(std::size_t n) const;
};

TransitionMatrix transition_matrix(const BiorthogonalEigensystem& eig0, const BiorthogonalEigensystem& eigT,
                                   const MetricOperator& g0, const MetricOperator& gT, const ComplexMatrix& U,
                                   const ThermalState& state0);

struct WorkEntry {
    std::size_t n, m;
    double w, p;
};

struct WorkDistribution {
    std::vector<WorkEntry> entries;
    double beta = 1;
    double Z0 = 1, Ztau = 1;
    double Emin_initial = 0, Emin_final = 0;

    double total() const;
};

WorkDistribution work_distribution(const TransitionMatrix& p, const BiorthogonalEigensystem& eig0,
                                   const BiorthogonalEigensystem& eigT, double beta);

struct JarzynskiReport {
    double exp_avg_work = 0;
    double exp_delta_F = 0;
    double relative_residual = 0;
    double mean_work = 0;
    double delta_F = 0;
    double irreversible_work = 0;
};

JarzynskiReport jarzynski_report(const WorkDistribution& wd);

// <e^{-beta W}> restricted to the lowest n_max initial and final levels,
// normalized by a caller-supplied Z0 (e.g. the closed form of an untruncated model)
double exp_work_partial_sum(const TransitionMatrix& p, const BiorthogonalEigensystem& eigT, double beta, double Z0,
                            std::size_t n_max);

// Full two-time measurement pipeline: Gibbs state of H(start), propagate,
// project on the eigenbasis of H(end).
struct TwoTimeResult {
    BiorthogonalEigensystem eig0, eigT;
    PropagationResult propagation;
    ThermalState state0;
    TransitionMatrix transitions;
    WorkDistribution work;
    JarzynskiReport report;
    double max_row_error = 0;  // max_n |sum_m overlap_nm - 1|
    double tail_mass = 0;
    // work of the perfectly adiabatic process (populations carried level by
    // level), the long-time limit of <W> for an isolated system
    double adiabatic_work = 0;
};

double adiabatic_work(const ThermalState& state0, const BiorthogonalEigensystem& eig0,
                      const BiorthogonalEigensystem& eigT);

TwoTimeResult two_time_measurement(const ModelSpec& model, const Protocol& protocol, double beta,
                                   const PropagateOptions& opt = {});

// Quasistatic four-stroke cycle A -> B (isotherm at T_hot), B -> C (isentrope),
// C -> D (isotherm at T_cold), D -> A (isentrope). Corners are full model
// specifications; legs interpolate their parameters linearly.
struct CyclePoint {
    int leg;  // 0..3
    double s;  // position along the leg
    double beta;
    double entropy;
    double energy;
};

struct CycleReport {
    double T_hot = 0, T_cold = 0;
    double Q_hot = 0, Q_cold = 0, W_net = 0;
    double isentrope_heat = 0;  // summed |dQ| on the isentropes, ~0 when quasistatic
    double efficiency = 0;
    double carnot_bound = 0;
    double first_law_residual = 0;  // |W_net - (Q_hot - Q_cold)|
    double max_imag = 0;            // largest imaginary part met in E and S
    std::vector<CyclePoint> entropy_trace;
};

ModelSpec interpolate(const ModelSpec& a, const ModelSpec& b, double s);

CycleReport quasistatic_cycle(const std::array<ModelSpec, 4>& corners, double T_hot, double T_cold,
                              std::size_t steps = 10000);

}  // namespace pt
