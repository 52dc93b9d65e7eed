#include <algorithm>
#include <cmath>
#include <limits>

#include "pseudotherm/errors.hpp"
#include "pseudotherm/linalg.hpp"

namespace pt {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Givens rotation with real c: [c s; -conj(s) c] [x; y] = [r; 0]
void givens(cplx x, cplx y, double& c, cplx& s) {
    const double ax = std::abs(x), ay = std::abs(y);
    if (ay == 0) {
        c = 1;
        s = 0;
        return;
    }
    if (ax == 0) {
        c = 0;
        s = std::conj(y) / ay;
        return;
    }
    const double nrm = std::hypot(ax, ay);
    c = ax / nrm;
    s = (x / ax) * std::conj(y) / nrm;
}

void hessenberg(ComplexMatrix& A, ComplexMatrix& Z) {
    const std::size_t n = A.dim();
    CVector v(n), w(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double xnorm = 0;
        for (std::size_t i = k + 1; i < n; ++i) xnorm += std::norm(A(i, k));
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0) continue;
        const cplx x0 = A(k + 1, k);
        const cplx alpha = (std::abs(x0) == 0 ? cplx(1) : x0 / std::abs(x0)) * (-xnorm);
        double vnorm = 0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = A(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm += std::norm(v[i]);
        }
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0) continue;
        for (std::size_t i = k + 1; i < n; ++i) v[i] /= vnorm;
        // A <- (I - 2 v v^H) A
        for (std::size_t j = 0; j < n; ++j) {
            cplx s{};
            for (std::size_t i = k + 1; i < n; ++i) s += std::conj(v[i]) * A(i, j);
            s *= 2.0;
            for (std::size_t i = k + 1; i < n; ++i) A(i, j) -= v[i] * s;
        }
        // A <- A (I - 2 v v^H), same for Z
        auto right = [&](ComplexMatrix& M) {
            for (std::size_t i = 0; i < n; ++i) {
                cplx s{};
                for (std::size_t j = k + 1; j < n; ++j) s += M(i, j) * v[j];
                s *= 2.0;
                for (std::size_t j = k + 1; j < n; ++j) M(i, j) -= s * std::conj(v[j]);
            }
        };
        right(A);
        right(Z);
        A(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) A(i, k) = 0;
    }
}

}  // namespace

Schur schur(const ComplexMatrix& A, int max_iterations_per_eigenvalue) {
    const std::size_t n = A.dim();
    Schur out{A, ComplexMatrix::identity(n)};
    ComplexMatrix& H = out.T;
    ComplexMatrix& Z = out.Z;
    if (n == 0) return out;
    hessenberg(H, Z);

    const double hnorm = std::max(H.max_abs(), std::numeric_limits<double>::min());
    std::vector<double> cs(n);
    std::vector<cplx> ss(n);
    std::size_t hi = n - 1;
    int iter = 0;
    while (hi > 0) {
        std::size_t l = hi;
        for (; l > 0; --l) {
            double s = std::abs(H(l - 1, l - 1)) + std::abs(H(l, l));
            if (s == 0) s = hnorm;
            if (std::abs(H(l, l - 1)) <= kEps * s) {
                H(l, l - 1) = 0;
                break;
            }
        }
        if (l == hi) {
            --hi;
            iter = 0;
            continue;
        }
        if (++iter > max_iterations_per_eigenvalue)
            throw NotConverged("complex QR iteration did not converge");

        cplx mu;
        if (iter % 10 == 0) {
            // exceptional shift to break cycles
            double e = std::abs(H(hi, hi - 1).real());
            if (hi >= 2) e += std::abs(H(hi - 1, hi - 2).real());
            mu = H(hi, hi) + 0.75 * e;
        } else {
            const cplx a = H(hi - 1, hi - 1), b = H(hi - 1, hi), c = H(hi, hi - 1), d = H(hi, hi);
            const cplx half = 0.5 * (a - d);
            const cplx disc = std::sqrt(half * half + b * c);
            const cplx m1 = 0.5 * (a + d) + disc, m2 = 0.5 * (a + d) - disc;
            mu = std::abs(m1 - d) < std::abs(m2 - d) ? m1 : m2;
        }

        for (std::size_t k = l; k <= hi; ++k) H(k, k) -= mu;
        for (std::size_t k = l; k < hi; ++k) {
            givens(H(k, k), H(k + 1, k), cs[k], ss[k]);
            const double c = cs[k];
            const cplx s = ss[k];
            for (std::size_t j = k; j < n; ++j) {
                const cplx a = H(k, j), b = H(k + 1, j);
                H(k, j) = c * a + s * b;
                H(k + 1, j) = -std::conj(s) * a + c * b;
            }
            H(k + 1, k) = 0;
        }
        for (std::size_t k = l; k < hi; ++k) {
            const double c = cs[k];
            const cplx s = ss[k];
            const std::size_t rmax = std::min(k + 1, hi);
            for (std::size_t i = 0; i <= rmax; ++i) {
                const cplx a = H(i, k), b = H(i, k + 1);
                H(i, k) = a * c + b * std::conj(s);
                H(i, k + 1) = -a * s + b * c;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const cplx a = Z(i, k), b = Z(i, k + 1);
                Z(i, k) = a * c + b * std::conj(s);
                Z(i, k + 1) = -a * s + b * c;
            }
        }
        for (std::size_t k = l; k <= hi; ++k) H(k, k) += mu;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) H(i, j) = 0;
    return out;
}

Balanced balance(const ComplexMatrix& A) {
    const std::size_t n = A.dim();
    Balanced out{A, std::vector<double>(n, 1.0)};
    ComplexMatrix& B = out.B;
    constexpr double radix = 2.0, factor = 0.95;
    const double sfmin = std::numeric_limits<double>::min() / kEps;
    const double sfmax = 1.0 / sfmin;
    bool noconv = true;
    for (int pass = 0; noconv && pass < 200; ++pass) {
        noconv = false;
        for (std::size_t i = 0; i < n; ++i) {
            double c = 0, r = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::norm(B(j, i));
                r += std::norm(B(i, j));
            }
            c = std::sqrt(c);
            r = std::sqrt(r);
            if (c == 0 || r == 0) continue;
            double g = r / radix, f = 1.0;
            const double s = c + r;
            while (c < g && f < sfmax) {
                f *= radix;
                c *= radix;
                r /= radix;
                g /= radix;
            }
            g = c / radix;
            while (g >= r && f > sfmin) {
                f /= radix;
                c /= radix;
                g /= radix;
                r *= radix;
            }
            if (c + r >= factor * s) continue;
            out.scale[i] *= f;
            noconv = true;
            for (std::size_t j = 0; j < n; ++j) B(i, j) /= f;
            for (std::size_t j = 0; j < n; ++j) B(j, i) *= f;
        }
    }
    return out;
}

ComplexMatrix inverse(const ComplexMatrix& A) {
    const std::size_t n = A.dim();
    ComplexMatrix M = A, R = ComplexMatrix::identity(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M(i, k)) > std::abs(M(p, k))) p = i;
        if (std::abs(M(p, k)) == 0) throw SingularMatrix("LU pivot vanished");
        if (p != k)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(M(k, j), M(p, j));
                std::swap(R(k, j), R(p, j));
            }
        const cplx piv = M(k, k);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            const cplx f = M(i, k) / piv;
            if (f == cplx{}) continue;
            for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
            for (std::size_t j = 0; j < n; ++j) R(i, j) -= f * R(k, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const cplx d = M(i, i);
        for (std::size_t j = 0; j < n; ++j) R(i, j) /= d;
    }
    return R;
}

HermitianEigensystem hermitian_eigensystem(const ComplexMatrix& A0, bool vectors) {
    const std::size_t n = A0.dim();
    ComplexMatrix A = A0;
    ComplexMatrix V = vectors ? ComplexMatrix::identity(n) : ComplexMatrix();
    // symmetrize to kill rounding asymmetry
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = A(i, i).real();
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx m = 0.5 * (A(i, j) + std::conj(A(j, i)));
            A(i, j) = m;
            A(j, i) = std::conj(m);
        }
    }
    // cyclic Jacobi with the relative off-diagonal test, which keeps small
    // eigenvalues of graded positive matrices accurate
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double b = std::abs(A(p, q));
                const double a = A(p, p).real(), d = A(q, q).real();
                if (b == 0 || b <= kEps * std::sqrt(std::abs(a * d))) {
                    A(p, q) = A(q, p) = 0;
                    continue;
                }
                rotated = true;
                const cplx e = A(p, q) / b;
                const double theta = (d - a) / (2 * b);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(1 + t * t), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx ap = A(k, p), aq = A(k, q);
                    A(k, p) = c * ap - s * std::conj(e) * aq;
                    A(k, q) = s * ap + c * std::conj(e) * aq;
                }
                if (vectors)
                    for (std::size_t k = 0; k < n; ++k) {
                        const cplx vp = V(k, p), vq = V(k, q);
                        V(k, p) = c * vp - s * std::conj(e) * vq;
                        V(k, q) = s * vp + c * std::conj(e) * vq;
                    }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx ap = A(p, k), aq = A(q, k);
                    A(p, k) = c * ap - s * e * aq;
                    A(q, k) = s * ap + c * e * aq;
                }
                A(p, q) = A(q, p) = 0;
                A(p, p) = A(p, p).real();
                A(q, q) = A(q, q).real();
            }
        if (!rotated) break;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return A(a, a).real() < A(b, b).real(); });
    HermitianEigensystem out;
    for (std::size_t i : order) out.values.push_back(A(i, i).real());
    if (vectors) {
        out.vectors = ComplexMatrix(n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = V(i, order[j]);
    }
    return out;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& A) { return hermitian_eigensystem(A, false).values; }

std::vector<double> singular_values(const ComplexMatrix& A) {
    const std::size_t n = A.dim();
    // one-sided Jacobi on columns, stored as rows of the adjoint for locality
    std::vector<CVector> u(n, CVector(n));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) u[j][i] = A(i, j);
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0, beta = 0;
                cplx gamma{};
                for (std::size_t i = 0; i < n; ++i) {
                    alpha += std::norm(u[p][i]);
                    beta += std::norm(u[q][i]);
                    gamma += std::conj(u[p][i]) * u[q][i];
                }
                const double ag = std::abs(gamma);
                if (ag == 0 || ag <= kEps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const cplx e = gamma / ag;
                const double zeta = (beta - alpha) / (2 * ag);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1 + zeta * zeta));
                const double c = 1 / std::sqrt(1 + t * t), s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx up = u[p][i], uq = std::conj(e) * u[q][i];
                    u[p][i] = c * up - s * uq;
                    u[q][i] = s * up + c * uq;
                }
            }
        if (!rotated) break;
    }
    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) sv[j] = norm2(u[j]);
    std::sort(sv.rbegin(), sv.rend());
    return sv;
}

ComplexMatrix expm(const ComplexMatrix& A) {
    const std::size_t n = A.dim();
    if (!A.all_finite()) throw InvalidArgument("expm of a non-finite matrix");
    // Diagonal similarity by powers of two is exact, and it keeps the scaling
    // count honest for operators that are only badly scaled, not large.
    Balanced bal = balance(A);
    ComplexMatrix B = std::move(bal.B);
    const double nrm = B.norm1();
    int s = 0;
    if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    if (s > 0) B *= std::ldexp(1.0, -s);

    // degree-16 Taylor polynomial, Paterson-Stockmeyer with blocks of 4
    constexpr int deg = 16;
    double coef[deg + 1];
    coef[0] = 1;
    for (int k = 1; k <= deg; ++k) coef[k] = coef[k - 1] / k;
    const ComplexMatrix I = ComplexMatrix::identity(n);
    const ComplexMatrix B2 = B * B, B3 = B2 * B, B4 = B2 * B2;
    const ComplexMatrix* pw[4] = {&I, &B, &B2, &B3};
    auto block = [&](int j) {
        ComplexMatrix m(n);
        for (int i = 0; i < 4; ++i) m.add_scaled(coef[4 * j + i], *pw[i]);
        return m;
    };
    ComplexMatrix P = coef[16] * I;
    for (int j = 3; j >= 0; --j) {
        P = P * B4;
        P += block(j);
    }
    for (int k = 0; k < s; ++k) P = P * P;

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) P(i, j) *= bal.scale[i] / bal.scale[j];
    return P;
}

}  // namespace pt
