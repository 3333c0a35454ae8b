#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "calabi/geometry.hpp"

namespace calabi {

// Symmetric (2,0) tensor field T_{ij}, canonical slots i <= j.
struct Hessian20 {
    ComplexField comp[2][2];
    const ComplexField& at(int i, int j) const { return i <= j ? comp[i][j] : comp[j][i]; }
};

// ---------------------------------------------------------------------------
// Operators attached to one immutable metric.  The Lichnerowicz operator is
// applied in divergence form, the exact adjoint chain of the covariant
// Hessian, so the quadratic-form identity and self-adjointness hold to
// spectral accuracy:
//     int v (L u) omega_phi^n = int <Hess v, Hess u> omega_phi^n.
// ---------------------------------------------------------------------------
class LichOperator {
  public:
    explicit LichOperator(const MetricData& m) : m_(&m) {
        const SpectralGrid& g = m.grid();
        const int n = g.n;
        MetricDerivatives md = metricDerivatives(m, false);
        // Christoffels Gamma^k_{ij} = g^{kl-bar} d_i g_{jl-bar}, i <= j
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    ComplexField f(g);
                    for (std::size_t p = 0; p < g.size(); ++p) {
                        const Herm2 inv = m.gInv.at(p);
                        cplx A[2][2];
                        A[0][0] = inv.a;
                        if (n == 2) {
                            A[1][1] = inv.b;
                            A[0][1] = std::conj(inv.c);
                            A[1][0] = inv.c;
                        }
                        cplx s(0.0, 0.0);
                        for (int l = 0; l < n; ++l) s += A[k][l] * md.d(i, j, l).v[p];
                        f.v[p] = s;
                    }
                    gamma_[k][i][j] = std::move(f);
                }
    }

    const MetricData& metric() const { return *m_; }

    // covariant (2,0) Hessian u_{;ij} = d_i d_j u - Gamma^k_{ij} d_k u
    Hessian20 hessian(const RealField& u) const {
        const SpectralGrid& g = m_->grid();
        const int n = g.n;
        ComplexField uhat = toSpectral(u);
        ComplexField du[2];
        for (int c = 0; c < n; ++c) {
            du[c] = ComplexField(g);
            du[c].v = uhat.v;
            std::array<int, 2> holo{0, 0}, anti{0, 0};
            holo[c] = 1;
            applyComplexDerivativeSpectral(g, du[c].v, holo, anti);
            fftInverse(g.dims(), g.N, du[c].v);
        }
        Hessian20 H;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                ComplexField t(g);
                t.v = uhat.v;
                std::array<int, 2> holo{0, 0}, anti{0, 0};
                holo[i] += 1;
                holo[j] += 1;
                applyComplexDerivativeSpectral(g, t.v, holo, anti);
                fftInverse(g.dims(), g.N, t.v);
                for (std::size_t p = 0; p < g.size(); ++p) {
                    cplx corr(0.0, 0.0);
                    for (int k = 0; k < n; ++k) corr += gamma_[k][i][j].v[p] * du[k].v[p];
                    t.v[p] -= corr;
                }
                H.comp[i][j] = std::move(t);
            }
        return H;
    }

    // pointwise |Hess u|^2 = g^{ik-bar} g^{jl-bar} u_{;ij} conj(u_{;kl})
    RealField hessNormSq(const Hessian20& H) const {
        const SpectralGrid& g = m_->grid();
        const int n = g.n;
        RealField out(g);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const Herm2 inv = m_->gInv.at(p);
            cplx A[2][2];
            A[0][0] = inv.a;
            if (n == 2) {
                A[1][1] = inv.b;
                A[0][1] = std::conj(inv.c);
                A[1][0] = inv.c;
            }
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l)
                            s += (A[i][k] * A[j][l] * H.at(i, j).v[p] *
                                  std::conj(H.at(k, l).v[p]))
                                     .real();
            out.v[p] = s;
        }
        return out;
    }

    // int |Hess u|^2 omega_phi^n
    double dirichlet(const RealField& u) const {
        RealField nsq = hessNormSq(hessian(u));
        double s = 0.0;
        for (std::size_t p = 0; p < nsq.size(); ++p) s += nsq.v[p] * m_->detG.v[p];
        return s * m_->grid().cellWeight();
    }

    // strong-form L u = (1/rho)[ d_i d_j W^{ij} + d_k (Gamma^k_{ij} W^{ij}) ],
    // W^{ij} = rho g^{ik-bar} g^{jl-bar} conj(u_{;kl})
    RealField apply(const RealField& u) const {
        const SpectralGrid& g = m_->grid();
        const int n = g.n;
        const std::size_t M = g.size();
        Hessian20 H = hessian(u);

        ComplexField W[2][2]; // i <= j
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) W[i][j] = ComplexField(g);
        for (std::size_t p = 0; p < M; ++p) {
            const Herm2 inv = m_->gInv.at(p);
            cplx A[2][2];
            A[0][0] = inv.a;
            if (n == 2) {
                A[1][1] = inv.b;
                A[0][1] = std::conj(inv.c);
                A[1][0] = inv.c;
            }
            const double rho = m_->detG.v[p];
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    cplx s(0.0, 0.0);
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l)
                            s += A[i][k] * A[j][l] * std::conj(H.at(k, l).v[p]);
                    W[i][j].v[p] = rho * s;
                }
        }

        // spectral accumulator: sum_{ij} d_i d_j W^{ij} + sum_k d_k Y^k
        ComplexField acc(g);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                ComplexField what = W[i][j];
                fftForward(g.dims(), g.N, what.v);
                std::array<int, 2> holo{0, 0}, anti{0, 0};
                holo[i] += 1;
                holo[j] += 1;
                applyComplexDerivativeSpectral(g, what.v, holo, anti);
                const double mult = (i == j) ? 1.0 : 2.0;
                for (std::size_t p = 0; p < M; ++p) acc.v[p] += mult * what.v[p];
            }
        for (int k = 0; k < n; ++k) {
            ComplexField Y(g);
            for (std::size_t p = 0; p < M; ++p) {
                cplx s(0.0, 0.0);
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        const double mult = (i == j) ? 1.0 : 2.0;
                        s += mult * gamma_[k][i][j].v[p] * W[i][j].v[p];
                    }
                Y.v[p] = s;
            }
            fftForward(g.dims(), g.N, Y.v);
            std::array<int, 2> holo{0, 0}, anti{0, 0};
            holo[k] = 1;
            applyComplexDerivativeSpectral(g, Y.v, holo, anti);
            for (std::size_t p = 0; p < M; ++p) acc.v[p] += Y.v[p];
        }
        dealiasSpectral(g, acc.v);
        fftInverse(g.dims(), g.N, acc.v);
        RealField out(g);
        for (std::size_t p = 0; p < M; ++p) out.v[p] = acc.v[p].real() / m_->detG.v[p];
        return out;
    }

    // pointwise Delta_phi u = g^{ij-bar} d_i d_j-bar u
    RealField laplacian(const RealField& u) const {
        HermitianField H = complexHessian(u);
        RealField out(m_->grid());
        for (std::size_t p = 0; p < out.size(); ++p)
            out.v[p] = contractHerm(m_->gInv.at(p), H.at(p), m_->grid().n);
        return out;
    }

    // divergence form of -Delta_phi:  (exactly symmetric in the rho-weighted
    // inner product; used by the conjugate-gradient solver)
    RealField minusLaplacianWeak(const RealField& u) const {
        const SpectralGrid& g = m_->grid();
        const int n = g.n;
        const std::size_t M = g.size();
        ComplexField uhat = toSpectral(u);
        ComplexField du[2];
        for (int c = 0; c < n; ++c) {
            du[c] = ComplexField(g);
            du[c].v = uhat.v;
            std::array<int, 2> holo{0, 0}, anti{0, 0};
            holo[c] = 1;
            applyComplexDerivativeSpectral(g, du[c].v, holo, anti);
            fftInverse(g.dims(), g.N, du[c].v);
        }
        ComplexField acc(g);
        for (int j = 0; j < n; ++j) {
            ComplexField F(g);
            for (std::size_t p = 0; p < M; ++p) {
                const Herm2 inv = m_->gInv.at(p);
                cplx A[2][2];
                A[0][0] = inv.a;
                if (n == 2) {
                    A[1][1] = inv.b;
                    A[0][1] = std::conj(inv.c);
                    A[1][0] = inv.c;
                }
                cplx s(0.0, 0.0);
                for (int i = 0; i < n; ++i) s += A[i][j] * du[i].v[p];
                F.v[p] = m_->detG.v[p] * s;
            }
            fftForward(g.dims(), g.N, F.v);
            std::array<int, 2> holo{0, 0}, anti{0, 0};
            anti[j] = 1;
            applyComplexDerivativeSpectral(g, F.v, holo, anti);
            for (std::size_t p = 0; p < M; ++p) acc.v[p] += F.v[p];
        }
        fftInverse(g.dims(), g.N, acc.v);
        RealField out(g);
        for (std::size_t p = 0; p < M; ++p) out.v[p] = -acc.v[p].real() / m_->detG.v[p];
        return out;
    }

  private:
    const MetricData* m_;
    ComplexField gamma_[2][2][2];
};

inline Hessian20 hessian20(const RealField& u, const MetricData& m) {
    return LichOperator(m).hessian(u);
}

inline RealField applyL(const RealField& u, const MetricData& m) {
    return LichOperator(m).apply(u);
}

// int u v omega_phi^n
inline double innerRho(const MetricData& m, const RealField& u, const RealField& v) {
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) s += u.v[p] * v.v[p] * m.detG.v[p];
    return s * m.grid().cellWeight();
}

// int |grad u|^2_{omega_phi} omega_phi^n
inline double gradientEnergy(const MetricData& m, const RealField& u) {
    const SpectralGrid& g = m.grid();
    const int n = g.n;
    ComplexField uhat = toSpectral(u);
    ComplexField du[2];
    for (int c = 0; c < n; ++c) {
        du[c] = ComplexField(g);
        du[c].v = uhat.v;
        std::array<int, 2> holo{0, 0}, anti{0, 0};
        holo[c] = 1;
        applyComplexDerivativeSpectral(g, du[c].v, holo, anti);
        fftInverse(g.dims(), g.N, du[c].v);
    }
    double s = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        cplx v[2] = {du[0].v[p], n == 2 ? du[1].v[p] : cplx{}};
        s += contractGrad(m.gInv.at(p), v, v, n).real() * m.detG.v[p];
    }
    return s * g.cellWeight();
}

// ---------------------------------------------------------------------------
// Derivative-norm channels for the flow trace.
//   i = 1, 2: metric-contracted covariant norms
//   i = 3, 4: flat-contracted partial-derivative norms, weight (|k|^2/4)^i
// ---------------------------------------------------------------------------
inline double gradSupNorm(const MetricData& m, const RealField& f) {
    const SpectralGrid& g = m.grid();
    const int n = g.n;
    ComplexField fhat = toSpectral(f);
    ComplexField df[2];
    for (int c = 0; c < n; ++c) {
        df[c] = ComplexField(g);
        df[c].v = fhat.v;
        std::array<int, 2> holo{0, 0}, anti{0, 0};
        holo[c] = 1;
        applyComplexDerivativeSpectral(g, df[c].v, holo, anti);
        fftInverse(g.dims(), g.N, df[c].v);
    }
    double sup = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        cplx v[2] = {df[0].v[p], n == 2 ? df[1].v[p] : cplx{}};
        sup = std::max(sup, contractGrad(m.gInv.at(p), v, v, n).real());
    }
    return std::sqrt(std::max(sup, 0.0));
}

// sup sqrt(|f_{;ij}|^2 + |dd-bar f|^2), both metric-contracted
inline double secondDerivSupNorm(const LichOperator& op, const RealField& f) {
    const MetricData& m = op.metric();
    RealField h20 = op.hessNormSq(op.hessian(f));
    HermitianField h11 = complexHessian(f);
    double sup = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) {
        const double s11 = hermNormSq(m.gInv.at(p), h11.at(p), m.grid().n);
        sup = std::max(sup, h20.v[p] + s11);
    }
    return std::sqrt(std::max(sup, 0.0));
}

// flat-contracted sup |grad^i f| (multiset of real-axis partials, 4^{-i} weight)
inline double flatDerivSupNorm(const RealField& f, int order) {
    const SpectralGrid& g = *f.grid;
    const int d = g.dims();
    ComplexField fhat = toSpectral(f);
    RealField acc(g, 0.0);

    std::array<int, 4> counts{0, 0, 0, 0};
    std::function<void(int, int)> rec = [&](int axis, int remaining) {
        if (axis == d - 1) {
            counts[axis] = remaining;
            // multinomial multiplicity of this multiset
            double mult = 1.0;
            int total = 0;
            for (int a = 0; a < d; ++a) total += counts[a];
            double fact = 1.0;
            for (int i = 2; i <= total; ++i) fact *= i;
            for (int a = 0; a < d; ++a) {
                double fa = 1.0;
                for (int i = 2; i <= counts[a]; ++i) fa *= i;
                mult *= fa;
            }
            mult = fact / mult;
            ComplexField t(g);
            t.v = fhat.v;
            applyRealDerivativeSpectral(g, t.v, counts);
            fftInverse(g.dims(), g.N, t.v);
            for (std::size_t p = 0; p < g.size(); ++p) {
                const double re = t.v[p].real();
                acc.v[p] += mult * re * re;
            }
            return;
        }
        for (int c = remaining; c >= 0; --c) {
            counts[axis] = c;
            rec(axis + 1, remaining - c);
        }
    };
    rec(0, order);

    double sup = 0.0;
    const double scale = std::pow(0.25, order);
    for (double x : acc.v) sup = std::max(sup, scale * x);
    return std::sqrt(std::max(sup, 0.0));
}

// Fourier-side flat Sobolev sums: int |grad^j f|^2 = V sum_k (|k|^2/4)^j |c_k|^2
inline double flatSobolevSum(const RealField& f, int order) {
    const SpectralGrid& g = *f.grid;
    ComplexField c = toSpectral(f);
    const double V = std::pow(g.period(), g.dims());
    double s = 0.0;
    forEachMode(g, [&](std::size_t p, const std::array<int, 4>& k) {
        double k2 = 0.0;
        for (int a = 0; a < g.dims(); ++a) k2 += static_cast<double>(k[a]) * k[a];
        s += std::pow(0.25 * k2, order) * std::norm(c.v[p]);
    });
    return V * s;
}

} // namespace calabi
