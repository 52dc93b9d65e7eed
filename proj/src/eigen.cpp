#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pseudotherm/errors.hpp"
#include "pseudotherm/linalg.hpp"

namespace pt {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Unit right eigenvectors of M from its Schur form, by back substitution.
std::vector<CVector> right_vectors(const ComplexMatrix& M, std::vector<cplx>& vals, int maxit) {
    const std::size_t n = M.dim();
    Schur S = schur(M, maxit);
    const ComplexMatrix& T = S.T;
    vals.resize(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = T(i, i);
    const double smin = std::max(kEps * T.max_abs(), std::numeric_limits<double>::min());

    std::vector<CVector> out(n, CVector(n));
    CVector y(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::fill(y.begin(), y.end(), cplx{});
        y[k] = 1;
        for (std::size_t jj = k; jj-- > 0;) {
            cplx s{};
            for (std::size_t l = jj + 1; l <= k; ++l) s += T(jj, l) * y[l];
            cplx d = T(jj, jj) - T(k, k);
            if (std::abs(d) < smin) d = smin;
            y[jj] = -s / d;
            const double big = std::abs(y[jj]);
            if (big > 1e150)
                for (std::size_t l = jj; l <= k; ++l) y[l] /= big;
        }
        CVector& x = out[k];
        for (std::size_t i = 0; i < n; ++i) {
            cplx s{};
            for (std::size_t l = 0; l <= k; ++l) s += S.Z(i, l) * y[l];
            x[i] = s;
        }
        const double nx = norm2(x);
        for (auto& v : x) v /= nx;
    }
    return out;
}

struct DisjointSets {
    std::vector<std::size_t> p;
    explicit DisjointSets(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    std::size_t find(std::size_t i) { return p[i] == i ? i : p[i] = find(p[i]); }
    void unite(std::size_t a, std::size_t b) { p[find(a)] = find(b); }
};

bool before(cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); }

}  // namespace

const Tolerances& default_tolerances() {
    static const Tolerances t{};
    return t;
}

const char* to_string(SpectrumKind k) {
    switch (k) {
        case SpectrumKind::AllReal: return "AllReal";
        case SpectrumKind::ConjugatePaired: return "ConjugatePaired";
        case SpectrumKind::Generic: return "Generic";
    }
    return "?";
}

BiorthogonalEigensystem eigendecompose(const ComplexMatrix& H, const Tolerances& tol) {
    const std::size_t n = H.dim();
    if (n == 0) throw InvalidArgument("empty matrix");
    if (!H.all_finite()) throw InvalidArgument("matrix has non-finite entries");

    // Work in the balanced frame B = D^-1 H D. Left vectors of H are right
    // vectors of B^dagger mapped back with D^-1; B^dagger is balanced as well.
    Balanced bal = balance(H);
    const std::vector<double>& d = bal.scale;
    std::vector<cplx> lam, mu;
    std::vector<CVector> R = right_vectors(bal.B, lam, tol.max_qr_iterations);
    std::vector<CVector> L = right_vectors(bal.B.adjoint(), mu, tol.max_qr_iterations);

    DisjointSets ds(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(lam[i] - lam[j]) <= tol.degeneracy * (1 + std::max(std::abs(lam[i]), std::abs(lam[j]))))
                ds.unite(i, j);

    // pair each left vector with the group of the nearest right eigenvalue
    std::vector<std::vector<std::size_t>> right_of(n), left_of(n);
    for (std::size_t i = 0; i < n; ++i) right_of[ds.find(i)].push_back(i);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double dist = std::abs(std::conj(mu[j]) - lam[i]);
            if (dist < bd) {
                bd = dist;
                best = i;
            }
        }
        left_of[ds.find(best)].push_back(j);
    }
    std::vector<std::size_t> rorder, lorder;
    for (std::size_t g = 0; g < n; ++g) {
        if (right_of[g].size() != left_of[g].size())
            throw Defective("left and right eigenvalue multiplicities disagree");
        rorder.insert(rorder.end(), right_of[g].begin(), right_of[g].end());
        lorder.insert(lorder.end(), left_of[g].begin(), left_of[g].end());
    }

    // An exceptional point shows up as a (nearly) singular overlap between
    // unit left and right vectors.
    ComplexMatrix O(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) O(a, b) = dotc(L[lorder[a]], R[rorder[b]]);
    const std::vector<double> sv = singular_values(O);
    const double cond = sv.back() > 0 ? 1.0 / sv.back() : std::numeric_limits<double>::infinity();
    if (!(cond <= tol.defect_condition))
        throw Defective("eigenvector overlap is numerically singular (1/sigma_min = " + std::to_string(cond) +
                        "); exceptional point or non-diagonalizable matrix");

    BiorthogonalEigensystem out;
    out.overlap_condition = cond;
    out.eigenvalues.resize(n);
    out.right.resize(n);
    out.left.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
        out.eigenvalues[a] = lam[rorder[a]];
        CVector psi = R[rorder[a]], phi = L[lorder[a]];
        for (std::size_t i = 0; i < n; ++i) {
            psi[i] *= d[i];
            phi[i] /= d[i];
        }
        const double np = norm2(psi);
        double amax = 0;
        for (auto& v : psi) {
            v /= np;
            amax = std::max(amax, std::abs(v));
        }
        std::size_t piv = 0;
        while (std::abs(psi[piv]) < (1 - 1e-10) * amax) ++piv;
        const cplx ph = std::conj(psi[piv]) / std::abs(psi[piv]);
        for (auto& v : psi) v *= ph;
        psi[piv] = std::abs(psi[piv]);
        out.right[a] = std::move(psi);
        out.left[a] = std::move(phi);
    }

    // biorthonormalize: L <- L (L^dagger R)^{-dagger}; the overlap is block
    // diagonal over degeneracy groups up to rounding
    ComplexMatrix M(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) M(a, b) = dotc(out.left[a], out.right[b]);
    const ComplexMatrix Mi = inverse(M).adjoint();
    std::vector<CVector> Lnew(n, CVector(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < n; ++b) {
            cplx s{};
            for (std::size_t a = 0; a < n; ++a) s += out.left[a][i] * Mi(a, b);
            Lnew[b][i] = s;
        }
    out.left = std::move(Lnew);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return before(out.eigenvalues[a], out.eigenvalues[b]); });
    BiorthogonalEigensystem sorted;
    sorted.overlap_condition = cond;
    std::vector<std::size_t> where(n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted.eigenvalues.push_back(out.eigenvalues[perm[k]]);
        sorted.right.push_back(std::move(out.right[perm[k]]));
        sorted.left.push_back(std::move(out.left[perm[k]]));
        where[perm[k]] = k;
    }
    DisjointSets gs(n);
    std::size_t a0 = 0;
    for (std::size_t g = 0; g < n; ++g) {
        for (std::size_t k = 1; k < right_of[g].size(); ++k) gs.unite(where[a0], where[a0 + k]);
        a0 += right_of[g].size();
    }
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t k = 0; k < n; ++k) groups[gs.find(k)].push_back(k);
    for (auto& g : groups)
        if (!g.empty()) sorted.degeneracy_groups.push_back(std::move(g));
    std::sort(sorted.degeneracy_groups.begin(), sorted.degeneracy_groups.end());
    return sorted;
}

SpectrumClass classify_spectrum(const std::vector<cplx>& eigs, double tol) {
    if (eigs.empty()) throw InvalidArgument("empty spectrum");
    const std::size_t n = eigs.size();
    SpectrumClass c;
    c.imag_tolerance = tol;
    c.partner.assign(n, n);
    auto scale = [](cplx e) { return std::max(1.0, std::abs(e)); };
    bool all_real = true;
    for (std::size_t k = 0; k < n; ++k)
        if (!(std::abs(eigs[k].imag()) < tol * scale(eigs[k]))) all_real = false;
    if (all_real) {
        std::iota(c.partner.begin(), c.partner.end(), 0);
        c.kind = SpectrumKind::AllReal;
        return c;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (c.partner[k] != n) continue;
        if (std::abs(eigs[k].imag()) < tol * scale(eigs[k])) {
            c.partner[k] = k;
            continue;
        }
        std::size_t best = n;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < n; ++m) {
            if (m == k || c.partner[m] != n) continue;
            const double dist = std::abs(eigs[m] - std::conj(eigs[k]));
            if (dist < bd) {
                bd = dist;
                best = m;
            }
        }
        if (best == n || bd > tol * scale(eigs[k])) {
            c.kind = SpectrumKind::Generic;
            c.partner.clear();
            return c;
        }
        c.partner[k] = best;
        c.partner[best] = k;
    }
    c.kind = SpectrumKind::ConjugatePaired;
    return c;
}

MetricOperator MetricOperator::from(ComplexMatrix g, ComplexMatrix g_inverse) {
    const std::size_t n = g.dim();
    if (g_inverse.dim() != n) throw InvalidArgument("metric and inverse dimensions differ");
    if (!g.all_finite() || !g_inverse.all_finite()) throw SingularMetric("metric has non-finite entries");
    const double gn = g.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            if (std::abs(g(i, j) - std::conj(g(j, i))) > 1e-9 * gn)
                throw InvalidArgument("metric is not hermitian");
            const cplx m = 0.5 * (g(i, j) + std::conj(g(j, i)));
            g(i, j) = m;
            g(j, i) = std::conj(m);
        }
    // g g^-1 = I, checked with row/column scaling so graded metrics pass
    const ComplexMatrix P = g * g_inverse;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double ref = 0;
            for (std::size_t k = 0; k < n; ++k) ref += std::abs(g(i, k)) * std::abs(g_inverse(k, j));
            const double err = std::abs(P(i, j) - (i == j ? 1.0 : 0.0));
            if (err > 1e-8 * std::max(1.0, ref)) throw SingularMetric("g * g_inverse differs from identity");
        }
    MetricOperator m;
    m.g = std::move(g);
    m.g_inverse = std::move(g_inverse);
    m.min_eigenvalue = hermitian_eigenvalues(m.g).front();
    m.positive_definite = m.min_eigenvalue > 0;
    return m;
}

MetricOperator MetricOperator::from(ComplexMatrix g) {
    ComplexMatrix gi;
    try {
        gi = inverse(g);
    } catch (const SingularMatrix&) {
        throw SingularMetric("metric is singular");
    }
    return from(std::move(g), std::move(gi));
}

MetricOperator build_metric(const BiorthogonalEigensystem& eig, const Tolerances& tol) {
    const std::size_t n = eig.dim();
    const SpectrumClass cls = classify_spectrum(eig.eigenvalues, tol.imag);
    if (cls.kind == SpectrumKind::Generic)
        throw NotPseudoHermitian("spectrum is not closed under conjugation; no metric exists");
    ComplexMatrix g(n), gi(n);
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t s = cls.partner[m];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                g(i, j) += eig.left[s][i] * std::conj(eig.left[m][j]);
                gi(i, j) += eig.right[m][i] * std::conj(eig.right[s][j]);
            }
    }
    MetricOperator out = MetricOperator::from(std::move(g), std::move(gi));
    if (out.positive_definite != (cls.kind == SpectrumKind::AllReal))
        throw NotPseudoHermitian(std::string("metric definiteness disagrees with spectrum class ") +
                                 to_string(cls.kind));
    return out;
}

double pseudo_hermiticity_residual(const ComplexMatrix& H, const MetricOperator& g) {
    return (H.adjoint() * g.g - g.g * H).frobenius_norm();
}

cplx g_inner(const CVector& u, const CVector& v, const MetricOperator& g) { return dotc(u, g.g * v); }

cplx g_trace(const ComplexMatrix& A, const BiorthogonalEigensystem& eig, const MetricOperator& g,
             const Tolerances& tol) {
    const std::size_t n = eig.dim();
    if (A.dim() != n || g.g.dim() != n) throw InvalidArgument("dimension mismatch in g_trace");
    const SpectrumClass cls = classify_spectrum(eig.eigenvalues, tol.imag);
    if (cls.kind == SpectrumKind::Generic) throw NotPseudoHermitian("g_trace needs a pseudo-hermitian spectrum");
    std::vector<std::size_t> group_of(n);
    for (std::size_t k = 0; k < eig.degeneracy_groups.size(); ++k)
        for (std::size_t i : eig.degeneracy_groups[k]) group_of[i] = k;

    std::vector<CVector> gpsi(n), apsi(n);
    for (std::size_t k = 0; k < n; ++k) {
        gpsi[k] = g.g * eig.right[k];
        apsi[k] = A * eig.right[k];
    }
    // each vector is measured against its g-dual, which lives in the group of E^*
    cplx total{};
    for (const auto& G : eig.degeneracy_groups) {
        const auto& Gs = eig.degeneracy_groups[group_of[cls.partner[G.front()]]];
        if (Gs.size() != G.size()) throw NotPseudoHermitian("conjugate groups differ in multiplicity");
        const std::size_t k = G.size();
        ComplexMatrix M(k), N(k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                M(a, b) = dotc(gpsi[Gs[a]], eig.right[G[b]]);
                N(a, b) = dotc(gpsi[Gs[a]], apsi[G[b]]);
            }
        total += (inverse(M) * N).trace();
    }
    return total;
}

}  // namespace pt
