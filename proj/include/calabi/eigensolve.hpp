#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "calabi/operators.hpp"
#include "calabi/rng.hpp"

namespace calabi {

struct EigenResult {
    double mu1 = 0.0;
    RealField eigenfield; // mean-zero, unit L^2(omega_phi) norm
    double residual = 0.0;
    int iterations = 0;
};

struct EigenOptions {
    double tol = 1e-6;
    int maxIter = 400;
    double sigma = 1e-3; // shift in the flat preconditioner
    CounterRng rng{17, 0};
    const RealField* warmStart = nullptr;
};

namespace eigdetail {

// Jacobi eigensolver for symmetric dim x dim (dim <= 3); returns index of
// the smallest eigenvalue; V columns are eigenvectors.
inline void smallSymEig(double A[3][3], int dim, double eval[3], double evec[3][3]) {
    double V[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j) off += A[i][j] * A[i][j];
        if (off < 1e-30) break;
        for (int p = 0; p < dim; ++p)
            for (int q = p + 1; q < dim; ++q) {
                if (std::abs(A[p][q]) < 1e-300) continue;
                const double theta = (A[q][q] - A[p][p]) / (2 * A[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < dim; ++k) {
                    const double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < dim; ++k) {
                    const double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < dim; ++k) {
                    const double vkp = V[k][p], vkq = V[k][q];
                    V[k][p] = c * vkp - s * vkq;
                    V[k][q] = s * vkp + c * vkq;
                }
            }
    }
    for (int i = 0; i < dim; ++i) {
        eval[i] = A[i][i];
        for (int k = 0; k < dim; ++k) evec[k][i] = V[k][i];
    }
}

} // namespace eigdetail

// Preconditioner: exact Fourier inverse of (sigma + flat symbol).
inline RealField flatPrecondition(const RealField& r, double sigma,
                                  const std::function<double(double)>& symbolOfK2) {
    const SpectralGrid& g = *r.grid;
    ComplexField c = toSpectral(r);
    forEachMode(g, [&](std::size_t p, const std::array<int, 4>& k) {
        double k2 = 0.0;
        for (int a = 0; a < g.dims(); ++a) k2 += static_cast<double>(k[a]) * k[a];
        c.v[p] /= (sigma + symbolOfK2(k2));
    });
    return fromSpectralReal(c);
}

// LOBPCG for the smallest eigenvalue of a self-adjoint operator on mean-zero
// fields in the omega_phi^n inner product.
inline EigenResult smallestEigenvalue(const MetricData& m,
                                      const std::function<RealField(const RealField&)>& Aop,
                                      const std::function<double(double)>& flatSymbol,
                                      const EigenOptions& opts) {
    const SpectralGrid& g = m.grid();
    const double V = m.volume();

    auto bdot = [&](const RealField& u, const RealField& v) { return innerRho(m, u, v); };
    auto project = [&](RealField& u) {
        double mean = 0.0;
        for (std::size_t p = 0; p < u.size(); ++p) mean += u.v[p] * m.detG.v[p];
        mean *= g.cellWeight() / V;
        for (double& x : u.v) x -= mean;
    };
    auto axpy = [&](RealField& y, double a, const RealField& x) {
        for (std::size_t p = 0; p < y.size(); ++p) y.v[p] += a * x.v[p];
    };
    auto scale = [&](RealField& y, double a) {
        for (double& x : y.v) x *= a;
    };

    RealField x = opts.warmStart ? *opts.warmStart
                                 : randomBandLimited(g, opts.rng.derive(1), std::max(2, g.N / 8));
    x = dealias(x);
    project(x);
    {
        const double nx = std::sqrt(bdot(x, x));
        if (nx <= 0) throw IncompatibleData("eigensolve: degenerate start vector");
        scale(x, 1.0 / nx);
    }
    RealField Ax = Aop(x);
    double theta = bdot(x, Ax);

    std::optional<RealField> p, Ap;
    double residual = 0.0;
    for (int it = 1; it <= opts.maxIter; ++it) {
        RealField r = Ax;
        axpy(r, -theta, x);
        residual = std::sqrt(std::max(bdot(r, r), 0.0));
        if (residual <= opts.tol) {
            EigenResult out;
            out.mu1 = theta;
            out.eigenfield = x;
            out.residual = residual;
            out.iterations = it - 1;
            return out;
        }

        RealField w = flatPrecondition(r, opts.sigma, flatSymbol);
        w = dealias(w);
        project(w);

        // B-orthonormal basis {x, w, [p]}
        std::vector<RealField> basis;
        std::vector<RealField> Abasis;
        basis.push_back(x);
        Abasis.push_back(Ax);
        auto addVec = [&](const RealField& v) {
            RealField q = v;
            for (std::size_t b = 0; b < basis.size(); ++b) axpy(q, -bdot(basis[b], q), basis[b]);
            for (std::size_t b = 0; b < basis.size(); ++b) axpy(q, -bdot(basis[b], q), basis[b]);
            const double nq = std::sqrt(std::max(bdot(q, q), 0.0));
            if (nq < 1e-13) return;
            scale(q, 1.0 / nq);
            basis.push_back(q);
            Abasis.push_back(Aop(q));
        };
        addVec(w);
        if (p) addVec(*p);

        const int dim = static_cast<int>(basis.size());
        double H[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) H[i][j] = bdot(basis[i], Abasis[j]);
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j) {
                const double s = 0.5 * (H[i][j] + H[j][i]);
                H[i][j] = H[j][i] = s;
            }
        double eval[3], evec[3][3];
        eigdetail::smallSymEig(H, dim, eval, evec);
        int best = 0;
        for (int i = 1; i < dim; ++i)
            if (eval[i] < eval[best]) best = i;

        RealField xNew(g, 0.0), AxNew(g, 0.0), pNew(g, 0.0), ApNew(g, 0.0);
        for (int i = 0; i < dim; ++i) {
            axpy(xNew, evec[i][best], basis[i]);
            axpy(AxNew, evec[i][best], Abasis[i]);
            if (i >= 1) {
                axpy(pNew, evec[i][best], basis[i]);
                axpy(ApNew, evec[i][best], Abasis[i]);
            }
        }
        const double nx = std::sqrt(std::max(bdot(xNew, xNew), 1e-300));
        scale(xNew, 1.0 / nx);
        scale(AxNew, 1.0 / nx);
        x = std::move(xNew);
        Ax = std::move(AxNew);
        theta = eval[best];
        p = std::move(pNew);
        Ap = std::move(ApNew);
    }
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "eigensolver did not reach residual %.3e in %d iterations (last %.3e)",
                  opts.tol, opts.maxIter, residual);
    throw NonConvergence(msg);
}

// First eigenvalue of the fourth-order operator L on mean-zero fields.
inline EigenResult firstEigenvalue(const MetricData& m, const EigenOptions& opts = {}) {
    LichOperator op(m);
    return smallestEigenvalue(
        m, [&](const RealField& u) { return op.apply(u); },
        [](double k2) { return 0.25 * k2 * 0.25 * k2; }, opts);
}

inline EigenResult firstEigenvalue(const LichOperator& op, const EigenOptions& opts = {}) {
    return smallestEigenvalue(
        op.metric(), [&](const RealField& u) { return op.apply(u); },
        [](double k2) { return 0.25 * k2 * 0.25 * k2; }, opts);
}

// Smallest nonzero eigenvalue of -Delta_phi (flat value 1/4).
inline EigenResult laplacianLambda1(const MetricData& m, EigenOptions opts = {}) {
    LichOperator op(m);
    // value error is quadratic in the residual; 2e-7 already gives ~1e-13
    if (opts.tol > 2e-7) opts.tol = 2e-7;
    return smallestEigenvalue(
        m, [&](const RealField& u) { return op.minusLaplacianWeak(u); },
        [](double k2) { return 0.25 * k2; }, opts);
}

// ---------------------------------------------------------------------------
// Preconditioned conjugate gradients for Delta_phi v = f, f mean-zero
// w.r.t. omega_phi^n; returns the mean-zero solution.
// ---------------------------------------------------------------------------
struct PoissonResult {
    RealField v;
    double residual = 0.0; // ||Delta v - f||_2 / ||f||_2 (omega_phi norms)
    int iterations = 0;
};

inline PoissonResult solvePoisson(const RealField& f, const MetricData& m, double tol = 1e-8,
                                  int maxIter = 400) {
    const SpectralGrid& g = m.grid();
    const double V = m.volume();
    LichOperator op(m);

    auto bdot = [&](const RealField& u, const RealField& v) { return innerRho(m, u, v); };
    const double fNorm = std::sqrt(std::max(bdot(f, f), 0.0));
    if (fNorm == 0.0) {
        PoissonResult out;
        out.v = RealField(g, 0.0);
        return out;
    }
    {
        double mean = 0.0;
        for (std::size_t p = 0; p < f.size(); ++p) mean += f.v[p] * m.detG.v[p];
        mean *= g.cellWeight();
        if (std::abs(mean) > 1e-10 * fNorm * std::sqrt(V))
            throw IncompatibleData("solvePoisson: right-hand side has nonzero mean (" +
                                   std::to_string(mean) + ")");
    }

    auto project = [&](RealField& u) {
        double mean = 0.0;
        for (std::size_t p = 0; p < u.size(); ++p) mean += u.v[p] * m.detG.v[p];
        mean *= g.cellWeight() / V;
        for (double& x : u.v) x -= mean;
    };
    auto prec = [&](const RealField& r) {
        RealField z = flatPrecondition(r, 1e-12, [](double k2) { return 0.25 * k2; });
        project(z);
        return z;
    };
    auto axpy = [](RealField& y, double a, const RealField& x) {
        for (std::size_t p = 0; p < y.size(); ++p) y.v[p] += a * x.v[p];
    };

    // A = -Delta (divergence form), b = -f
    RealField b = f;
    for (double& x : b.v) x = -x;
    project(b);

    RealField v(g, 0.0);
    RealField r = b;
    RealField z = prec(r);
    RealField pdir = z;
    double rz = bdot(r, z);
    int it = 0;
    double strongResidual = 1e300;
    while (it < maxIter) {
        ++it;
        RealField Apd = op.minusLaplacianWeak(pdir);
        const double pAp = bdot(pdir, Apd);
        if (!(pAp > 0)) throw NonConvergence("solvePoisson: operator lost positivity");
        const double alpha = rz / pAp;
        axpy(v, alpha, pdir);
        axpy(r, -alpha, Apd);
        const double rNorm = std::sqrt(std::max(bdot(r, r), 0.0));
        if (rNorm <= 0.2 * tol * fNorm) {
            project(v);
            RealField strong = op.laplacian(v);
            axpy(strong, -1.0, f);
            strongResidual = std::sqrt(std::max(bdot(strong, strong), 0.0)) / fNorm;
            if (strongResidual <= tol) {
                PoissonResult out;
                out.v = std::move(v);
                out.residual = strongResidual;
                out.iterations = it;
                return out;
            }
        }
        z = prec(r);
        const double rzNew = bdot(r, z);
        const double beta = rzNew / rz;
        rz = rzNew;
        for (std::size_t p = 0; p < pdir.size(); ++p) pdir.v[p] = z.v[p] + beta * pdir.v[p];
    }
    throw NonConvergence("solvePoisson: no convergence in " + std::to_string(maxIter) +
                         " iterations (residual " + std::to_string(strongResidual) + ")");
}

// ---------------------------------------------------------------------------
// Moser check: empirical constant of the global boundedness estimate
//   sup(v - mean v) <= C ||f||_{p*},  p* = 2np/(2n+p),  p > 2n.
// ---------------------------------------------------------------------------
inline double lpNormRho(const MetricData& m, const RealField& f, double p) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += std::pow(std::abs(f.v[i]), p) * m.detG.v[i];
    return std::pow(s * m.grid().cellWeight(), 1.0 / p);
}

inline double moserRatio(const MetricData& m, double p, int trials, const CounterRng& rng) {
    const SpectralGrid& g = m.grid();
    const int n = g.n;
    if (trials <= 0) throw IncompatibleData("moserRatio: empty sample");
    if (!(p > 2.0 * n)) throw IncompatibleData("moserRatio: requires p > 2n");
    const double pStar = 2.0 * n * p / (2.0 * n + p);
    const double V = m.volume();

    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        RealField f = randomBandLimited(g, rng.derive(static_cast<std::uint64_t>(t)),
                                        std::max(2, g.N / 4));
        double mean = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) mean += f.v[i] * m.detG.v[i];
        mean *= g.cellWeight() / V;
        for (double& x : f.v) x -= mean;

        PoissonResult sol = solvePoisson(f, m);
        double vmax = -1e300;
        for (double x : sol.v.v) vmax = std::max(vmax, x); // v is mean-zero already
        best = std::max(best, vmax / lpNormRho(m, f, pStar));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Trial-function lower estimate of the Sobolev constant
//   (1/V int |f|^{2*})^{1/2*} <= C_S [ (1/V int |grad f|^2)^{1/2}
//                                      + (1/V int f^2)^{1/2} ],  2* = 2m/(m-2).
// The critical dimension m = 2 (n = 1) has no such exponent; a p = 4
// Gagliardo-type surrogate is reported there and flagged.
// ---------------------------------------------------------------------------
struct SobolevEstimate {
    double value = 0.0;
    bool surrogate = false; // true for n = 1
};

inline SobolevEstimate sobolevLowerEstimate(const MetricData& m, int trials,
                                            const CounterRng& rng) {
    if (trials < 1) throw IncompatibleData("sobolevLowerEstimate: trials >= 1 required");
    const SpectralGrid& g = m.grid();
    const double V = m.volume();
    const double expo = 4.0; // 2m/(m-2) = 4 at m = 4; surrogate p = 4 at m = 2
    LichOperator op(m);

    auto vnorm = [&](const RealField& f, double q) {
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            s += std::pow(std::abs(f.v[i]), q) * m.detG.v[i];
        return std::pow(s * g.cellWeight() / V, 1.0 / q);
    };
    auto ratio = [&](const RealField& f) {
        const double A = vnorm(f, expo);
        const double B1 = std::sqrt(std::max(gradientEnergy(m, f) / V, 0.0));
        const double B2 = vnorm(f, 2.0);
        return A / (B1 + B2);
    };

    double best = ratio(RealField(g, 1.0)); // constants realize ratio 1 exactly
    for (int t = 0; t < trials; ++t) {
        RealField f = randomBandLimited(g, rng.derive(1000 + static_cast<std::uint64_t>(t)),
                                        std::max(2, g.N / 4));
        double r = ratio(f);
        best = std::max(best, r);

        // a few fixed-step ascent refinements on the ratio
        for (int step = 0; step < 3; ++step) {
            const double A = vnorm(f, expo);
            const double B1 = std::sqrt(std::max(gradientEnergy(m, f) / V, 0.0));
            const double B2 = vnorm(f, 2.0);
            RealField lap = op.minusLaplacianWeak(f);
            RealField dir(g);
            for (std::size_t i = 0; i < f.size(); ++i) {
                const double fa = f.v[i];
                const double dA = std::pow(std::abs(fa), expo - 1.0) * (fa >= 0 ? 1 : -1) /
                                  std::pow(A, expo - 1.0);
                const double dB = (B1 > 0 ? lap.v[i] / B1 : 0.0) + fa / std::max(B2, 1e-300);
                dir.v[i] = dA / A - dB / (B1 + B2);
            }
            const double dn = std::sqrt(std::max(innerRho(m, dir, dir), 1e-300));
            bool improved = false;
            for (double eta : {0.5, 0.1}) {
                RealField trialF = f;
                for (std::size_t i = 0; i < f.size(); ++i)
                    trialF.v[i] += eta / dn * dir.v[i];
                const double rt = ratio(trialF);
                if (rt > r) {
                    f = std::move(trialF);
                    r = rt;
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        best = std::max(best, r);
    }
    return SobolevEstimate{best, g.n == 1};
}

// ---------------------------------------------------------------------------
// ConstantsReport
// ---------------------------------------------------------------------------
struct ConstantsReport {
    double lambda1 = 0.0;
    double poincare = 0.0; // 1/(lambda1 V)
    double sobolevLower = 0.0;
    double moserRatio = 0.0;
    bool sobolevSurrogate = false;

    static std::string csvHeader() { return "lambda1,poincare,sobolevLower,moserRatio,sobolevSurrogate"; }
    std::string csvRow() const {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d", lambda1, poincare,
                      sobolevLower, moserRatio, sobolevSurrogate ? 1 : 0);
        return buf;
    }
};

inline ConstantsReport evaluateConstants(const MetricData& m, const CounterRng& rng,
                                         int moserTrials = 20, int sobolevTrials = 10,
                                         double moserP = 0.0) {
    ConstantsReport r;
    EigenOptions opts;
    opts.rng = rng.derive(7);
    r.lambda1 = laplacianLambda1(m, opts).mu1;
    r.poincare = 1.0 / (r.lambda1 * m.volume());
    SobolevEstimate se = sobolevLowerEstimate(m, sobolevTrials, rng.derive(8));
    r.sobolevLower = se.value;
    r.sobolevSurrogate = se.surrogate;
    const double p = moserP > 0 ? moserP : 2.0 * m.grid().n + 2.0;
    r.moserRatio = moserRatio(m, p, moserTrials, rng.derive(9));
    return r;
}

} // namespace calabi
