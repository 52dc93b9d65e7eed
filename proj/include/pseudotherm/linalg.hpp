#pragma once

#include <cstddef>
#include <vector>

#include "pseudotherm/matrix.hpp"

namespace pt {

// One place for every numerical threshold; callers copy and adjust.
struct Tolerances {
    double biorthonormality = 1e-10;
    double defect_condition = 1e8;   // 1/sigma_min of the unit left/right overlap
    double degeneracy = 1e-8;        // relative to 1 + |E|
    double imag = 1e-9;              // spectrum classification, relative to max(1, |E|)
    double reality = 1e-10;          // thermodynamic scalars
    int max_qr_iterations = 60;      // per eigenvalue
};

const Tolerances& default_tolerances();

struct BiorthogonalEigensystem {
    std::vector<cplx> eigenvalues;
    std::vector<CVector> right;  // psi_n, unit 2-norm, phase fixed
    std::vector<CVector> left;   // phi_n with <phi_m, psi_n> = delta_mn
    std::vector<std::vector<std::size_t>> degeneracy_groups;
    double overlap_condition = 1;  // 1/sigma_min of the unit overlap, balanced frame

    std::size_t dim() const { return eigenvalues.size(); }
};

BiorthogonalEigensystem eigendecompose(const ComplexMatrix& H,
                                       const Tolerances& tol = default_tolerances());

enum class SpectrumKind { AllReal, ConjugatePaired, Generic };
const char* to_string(SpectrumKind k);

struct SpectrumClass {
    SpectrumKind kind = SpectrumKind::Generic;
    double imag_tolerance = 0;
    // partner[n] = index of E_n^*; only meaningful unless Generic
    std::vector<std::size_t> partner;
};

SpectrumClass classify_spectrum(const std::vector<cplx>& eigs, double tol = default_tolerances().imag);

struct MetricOperator {
    ComplexMatrix g;
    ComplexMatrix g_inverse;
    bool positive_definite = false;
    double min_eigenvalue = 0;

    // Validates hermiticity and g * g_inverse = I.
    static MetricOperator from(ComplexMatrix g, ComplexMatrix g_inverse);
    // Inverse by LU.
    static MetricOperator from(ComplexMatrix g);
};

MetricOperator build_metric(const BiorthogonalEigensystem& eig,
                            const Tolerances& tol = default_tolerances());

double pseudo_hermiticity_residual(const ComplexMatrix& H, const MetricOperator& g);
cplx g_inner(const CVector& u, const CVector& v, const MetricOperator& g);
// sum over eigenvectors of <psi, g A psi>, each normalized by its g-dual pairing;
// equals tr A for any valid eigensystem and any pseudo-hermiticity metric of it
cplx g_trace(const ComplexMatrix& A, const BiorthogonalEigensystem& eig, const MetricOperator& g,
             const Tolerances& tol = default_tolerances());

// dense helpers
ComplexMatrix inverse(const ComplexMatrix& A);
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& A);  // ascending
struct HermitianEigensystem {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // columns, present when requested
};
HermitianEigensystem hermitian_eigensystem(const ComplexMatrix& A, bool vectors = true);
std::vector<double> singular_values(const ComplexMatrix& A);        // descending
ComplexMatrix expm(const ComplexMatrix& A);

struct Balanced {
    ComplexMatrix B;            // D^-1 A D
    std::vector<double> scale;  // D, powers of two
};
Balanced balance(const ComplexMatrix& A);

struct Schur {
    ComplexMatrix T;  // upper triangular
    ComplexMatrix Z;  // unitary, A = Z T Z^dagger
};
Schur schur(const ComplexMatrix& A, int max_iterations_per_eigenvalue = 60);

}  // namespace pt
