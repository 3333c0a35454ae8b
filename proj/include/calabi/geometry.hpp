#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "calabi/errors.hpp"
#include "calabi/grid.hpp"

namespace calabi {

// ---------------------------------------------------------------------------
// Pointwise Hermitian 2x2 values:  [[a, c], [conj(c), b]].  For n = 1 only
// `a` is meaningful.  Conventions (fixed once for the whole artifact):
//   omega = i g_{ij} dz^i dz^j-bar, flat g0 = identity,
//   Delta = g^{ij-bar} d_i d_j-bar  (complex Laplacian, symbol -|k|^2/4),
//   volume form omega_phi^n  <->  det(g_phi) * cellWeight nodewise.
// ---------------------------------------------------------------------------
struct Herm2 {
    double a = 0.0, b = 0.0;
    cplx c{0.0, 0.0};
};

inline double hermDet(const Herm2& h, int n) {
    return n == 1 ? h.a : h.a * h.b - std::norm(h.c);
}

inline double hermMinEig(const Herm2& h, int n) {
    if (n == 1) return h.a;
    const double mid = 0.5 * (h.a + h.b);
    const double rad = std::sqrt(0.25 * (h.a - h.b) * (h.a - h.b) + std::norm(h.c));
    return mid - rad;
}

inline Herm2 hermInv(const Herm2& h, int n) {
    Herm2 r;
    if (n == 1) {
        r.a = 1.0 / h.a;
        return r;
    }
    const double det = hermDet(h, 2);
    r.a = h.b / det;
    r.b = h.a / det;
    r.c = -h.c / det;
    return r;
}

// Polarized mixed determinant, normalized so mixedDet(A, A) = det A.
// Discretizes the wedge product of two (1,1)-forms for n = 2.
inline double mixedDet(const Herm2& A, const Herm2& B) {
    return 0.5 * (A.a * B.b + B.a * A.b) - (A.c * std::conj(B.c)).real();
}

// g^{ij-bar} H_{ij-bar} for Hermitian H and inv = matrix inverse of g.
inline double contractHerm(const Herm2& inv, const Herm2& H, int n) {
    if (n == 1) return inv.a * H.a;
    return inv.a * H.a + inv.b * H.b + 2.0 * (std::conj(inv.c) * H.c).real();
}

// g^{ij-bar} u_i conj(v_j) for (1,0) vectors u, v.
inline cplx contractGrad(const Herm2& inv, const cplx u[2], const cplx v[2], int n) {
    if (n == 1) return inv.a * u[0] * std::conj(v[0]);
    // A[i][j] = g^{ij-bar} = conj(inv)[i][j] with inv = [[a, c], [conj c, b]]
    return inv.a * u[0] * std::conj(v[0]) + inv.b * u[1] * std::conj(v[1]) +
           std::conj(inv.c) * u[0] * std::conj(v[1]) + inv.c * u[1] * std::conj(v[0]);
}

// |H|^2 = g^{il-bar} g^{kj-bar} H_{ij-bar} conj(H_{kl-bar})  (Hermitian H),
// equal to tr((g^{-1} H)^2).
inline double hermNormSq(const Herm2& inv, const Herm2& H, int n) {
    if (n == 1) {
        const double t = inv.a * H.a;
        return t * t;
    }
    const cplx g11 = inv.a, g22 = inv.b, g12 = inv.c, g21 = std::conj(inv.c);
    const cplx h11 = H.a, h22 = H.b, h12 = H.c, h21 = std::conj(H.c);
    // M = inv * H; |H|^2 = tr(M^2)
    const cplx m11 = g11 * h11 + g12 * h21;
    const cplx m12 = g11 * h12 + g12 * h22;
    const cplx m21 = g21 * h11 + g22 * h21;
    const cplx m22 = g21 * h12 + g22 * h22;
    return (m11 * m11 + 2.0 * m12 * m21 + m22 * m22).real();
}

// ---------------------------------------------------------------------------
// Hermitian tensor field, one Herm2 per node
// ---------------------------------------------------------------------------
struct HermitianField {
    const SpectralGrid* grid = nullptr;
    RealField d0, d1;
    ComplexField off;

    HermitianField() = default;
    explicit HermitianField(const SpectralGrid& g) : grid(&g), d0(g) {
        if (g.n == 2) {
            d1 = RealField(g);
            off = ComplexField(g);
        }
    }

    Herm2 at(std::size_t i) const {
        Herm2 h;
        h.a = d0.v[i];
        if (grid->n == 2) {
            h.b = d1.v[i];
            h.c = off.v[i];
        }
        return h;
    }
    void set(std::size_t i, const Herm2& h) {
        d0.v[i] = h.a;
        if (grid->n == 2) {
            d1.v[i] = h.b;
            off.v[i] = h.c;
        }
    }
};

// Complex Hessian d_i d_j-bar f from spectral coefficients of f.
inline HermitianField complexHessianFromSpectral(const SpectralGrid& g,
                                                 const std::vector<cplx>& fhat) {
    HermitianField H(g);
    {
        ComplexField c(g);
        c.v = fhat;
        applyComplexDerivativeSpectral(g, c.v, {1, 0}, {1, 0});
        fftInverse(g.dims(), g.N, c.v);
        for (std::size_t i = 0; i < g.size(); ++i) H.d0.v[i] = c.v[i].real();
    }
    if (g.n == 2) {
        ComplexField c(g);
        c.v = fhat;
        applyComplexDerivativeSpectral(g, c.v, {0, 1}, {0, 1});
        fftInverse(g.dims(), g.N, c.v);
        for (std::size_t i = 0; i < g.size(); ++i) H.d1.v[i] = c.v[i].real();

        ComplexField o(g);
        o.v = fhat;
        applyComplexDerivativeSpectral(g, o.v, {1, 0}, {0, 1});
        fftInverse(g.dims(), g.N, o.v);
        H.off = std::move(o);
    }
    return H;
}

inline HermitianField complexHessian(const RealField& f) {
    ComplexField c = toSpectral(f);
    return complexHessianFromSpectral(*f.grid, c.v);
}

// ---------------------------------------------------------------------------
// KahlerBackground: the reference metric omega = omega_flat + i dd-bar psi0.
// On the torus c1 = 0, so the class average scalar curvature is exactly 0.
// ---------------------------------------------------------------------------
struct KahlerBackground {
    SpectralGrid grid;
    RealField psi0;
    ComplexField psi0Hat;
    HermitianField g0;
    HermitianField gInv0;
    HermitianField ric0;
    RealField detG0;
    RealField s0; // scalar curvature of the background
    double volume = 0.0;
    double margin0 = 0.0;
    double sBar = 0.0;         // exactly zero on the torus
    double sBarResidual = 0.0; // computed mean of S(omega), diagnostic
    bool flatBackground = true;

    explicit KahlerBackground(const SpectralGrid& g) : KahlerBackground(g, RealField(g, 0.0)) {}

    KahlerBackground(const SpectralGrid& g, RealField psi) : grid(g), psi0(std::move(psi)) {
        psi0.grid = &grid;
        psi0Hat = toSpectral(psi0);
        flatBackground = true;
        for (double x : psi0.v)
            if (x != 0.0) {
                flatBackground = false;
                break;
            }

        g0 = complexHessianFromSpectral(grid, psi0Hat.v);
        const std::size_t M = grid.size();
        for (std::size_t i = 0; i < M; ++i) {
            Herm2 h = g0.at(i);
            h.a += 1.0;
            if (grid.n == 2) h.b += 1.0;
            g0.set(i, h);
        }

        margin0 = 1e300;
        detG0 = RealField(grid);
        gInv0 = HermitianField(grid);
        RealField logDet(grid);
        for (std::size_t i = 0; i < M; ++i) {
            const Herm2 h = g0.at(i);
            margin0 = std::min(margin0, hermMinEig(h, grid.n));
        }
        if (margin0 <= 0.0) throw PositivityViolation(margin0);
        for (std::size_t i = 0; i < M; ++i) {
            const Herm2 h = g0.at(i);
            detG0.v[i] = hermDet(h, grid.n);
            gInv0.set(i, hermInv(h, grid.n));
            logDet.v[i] = std::log(detG0.v[i]);
        }
        volume = integrate(detG0);

        ComplexField ld = toSpectral(logDet);
        ric0 = complexHessianFromSpectral(grid, ld.v);
        s0 = RealField(grid);
        double sMean = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            Herm2 r = ric0.at(i);
            r.a = -r.a;
            r.b = -r.b;
            r.c = -r.c;
            ric0.set(i, r);
            s0.v[i] = contractHerm(gInv0.at(i), r, grid.n);
            sMean += s0.v[i] * detG0.v[i];
        }
        sBarResidual = sMean * grid.cellWeight() / volume;
    }
};

// ---------------------------------------------------------------------------
// PotentialState: a Kahler potential with its positivity certificate.
// Construction fails with PositivityViolation when omega_phi is not Kahler.
// ---------------------------------------------------------------------------
struct PotentialState {
    const KahlerBackground* bg = nullptr;
    RealField phi;
    ComplexField phiHat;
    HermitianField g; // g0 + dd-bar phi
    double positivityMargin = 0.0;

    PotentialState() = default;
    PotentialState(const KahlerBackground& back, RealField phi_) : bg(&back), phi(std::move(phi_)) {
        phi.grid = &bg->grid;
        phiHat = toSpectral(phi);
        HermitianField hess = complexHessianFromSpectral(bg->grid, phiHat.v);
        g = bg->g0;
        const std::size_t M = bg->grid.size();
        positivityMargin = 1e300;
        for (std::size_t i = 0; i < M; ++i) {
            Herm2 h = g.at(i);
            const Herm2 p = hess.at(i);
            h.a += p.a;
            h.b += p.b;
            h.c += p.c;
            g.set(i, h);
            positivityMargin = std::min(positivityMargin, hermMinEig(h, bg->grid.n));
        }
        if (positivityMargin <= 0.0) throw PositivityViolation(positivityMargin);
    }
};

// ---------------------------------------------------------------------------
// MetricData: everything derived from one assembled metric, immutable.
// ---------------------------------------------------------------------------
struct MetricData {
    const KahlerBackground* bg = nullptr;
    ComplexField totalHat; // spectral coefficients of psi0 + phi
    HermitianField g;
    HermitianField gInv;
    RealField detG;
    RealField detRatio; // det(g_phi)/det(g0)
    RealField h;        // log volume ratio
    HermitianField ric;
    RealField S; // scalar curvature, dealiased
    RealField trRatio;
    double margin = 0.0;

    const SpectralGrid& grid() const { return bg->grid; }
    double sBar() const { return bg->sBar; }
    double volume() const { return bg->volume; }
};

inline MetricData assembleMetric(const PotentialState& state) {
    const KahlerBackground& bg = *state.bg;
    const SpectralGrid& grid = bg.grid;
    const std::size_t M = grid.size();

    MetricData m;
    m.bg = &bg;
    m.margin = state.positivityMargin;
    m.g = state.g;
    m.totalHat = ComplexField(grid);
    for (std::size_t i = 0; i < M; ++i) m.totalHat.v[i] = bg.psi0Hat.v[i] + state.phiHat.v[i];

    m.gInv = HermitianField(grid);
    m.detG = RealField(grid);
    m.detRatio = RealField(grid);
    m.h = RealField(grid);
    m.trRatio = RealField(grid);
    RealField logDet(grid);
    for (std::size_t i = 0; i < M; ++i) {
        const Herm2 gg = m.g.at(i);
        const double det = hermDet(gg, grid.n);
        if (!(det > 0.0)) throw PositivityViolation(det);
        m.detG.v[i] = det;
        m.detRatio.v[i] = det / bg.detG0.v[i];
        m.h.v[i] = std::log(m.detRatio.v[i]);
        logDet.v[i] = std::log(det);
        const Herm2 inv = hermInv(gg, grid.n);
        m.gInv.set(i, inv);
        m.trRatio.v[i] = contractHerm(inv, bg.g0.at(i), grid.n);
    }

    // Ric = -dd-bar log det g, S = g^{ij-bar} R_{ij-bar}
    ComplexField ld = toSpectral(logDet);
    m.ric = complexHessianFromSpectral(grid, ld.v);
    m.S = RealField(grid);
    for (std::size_t i = 0; i < M; ++i) {
        Herm2 r = m.ric.at(i);
        r.a = -r.a;
        r.b = -r.b;
        r.c = -r.c;
        m.ric.set(i, r);
        m.S.v[i] = contractHerm(m.gInv.at(i), r, grid.n);
    }
    m.S = dealias(m.S);
    return m;
}

inline const HermitianField& ricci(const MetricData& m) { return m.ric; }
inline const RealField& scalarCurvature(const MetricData& m) { return m.S; }
inline const RealField& traceRatio(const MetricData& m) { return m.trRatio; }

// ---------------------------------------------------------------------------
// Derivative tensors of the metric, taken from the spectral potential:
//   dG[i][j][l]  = d_i d_j d_l-bar (psi0 + phi)      (= d_i g_{jl-bar})
//   ddG[i][j][k][l] = d_i d_j-bar d_k d_l-bar (psi0+phi) (= d_i d_j-bar g_{kl-bar})
// ---------------------------------------------------------------------------
struct MetricDerivatives {
    int n = 1;
    // dG: symmetric in (i, j); stored at [i][j][l] for i <= j
    ComplexField dG[2][2][2];
    // ddG: symmetric in (i, k) and (j, l); canonical slots i <= k, j <= l
    ComplexField ddG[2][2][2][2];
    bool withSecond = false;

    const ComplexField& d(int i, int j, int l) const { return i <= j ? dG[i][j][l] : dG[j][i][l]; }
    const ComplexField& dd(int i, int j, int k, int l) const {
        return ddG[std::min(i, k)][std::min(j, l)][std::max(i, k)][std::max(j, l)];
    }
};

inline ComplexField mixedDerivativeField(const SpectralGrid& g, const std::vector<cplx>& fhat,
                                         const std::array<int, 2>& holo,
                                         const std::array<int, 2>& anti) {
    ComplexField c(g);
    c.v = fhat;
    applyComplexDerivativeSpectral(g, c.v, holo, anti);
    fftInverse(g.dims(), g.N, c.v);
    return c;
}

inline MetricDerivatives metricDerivatives(const MetricData& m, bool withSecond) {
    const SpectralGrid& g = m.grid();
    MetricDerivatives md;
    md.n = g.n;
    md.withSecond = withSecond;
    for (int i = 0; i < g.n; ++i)
        for (int j = i; j < g.n; ++j)
            for (int l = 0; l < g.n; ++l) {
                std::array<int, 2> holo{0, 0}, anti{0, 0};
                holo[i] += 1;
                holo[j] += 1;
                anti[l] += 1;
                md.dG[i][j][l] = mixedDerivativeField(g, m.totalHat.v, holo, anti);
            }
    if (withSecond) {
        for (int i = 0; i < g.n; ++i)
            for (int k = i; k < g.n; ++k)
                for (int j = 0; j < g.n; ++j)
                    for (int l = j; l < g.n; ++l) {
                        std::array<int, 2> holo{0, 0}, anti{0, 0};
                        holo[i] += 1;
                        holo[k] += 1;
                        anti[j] += 1;
                        anti[l] += 1;
                        md.ddG[i][j][k][l] = mixedDerivativeField(g, m.totalHat.v, holo, anti);
                    }
    }
    return md;
}

// sup over nodes of the fully contracted pointwise norm |Rm|
inline double riemannNorm(const MetricData& m) {
    const SpectralGrid& grid = m.grid();
    const int n = grid.n;
    const std::size_t M = grid.size();
    MetricDerivatives md = metricDerivatives(m, true);

    double sup = 0.0;
    std::vector<cplx> R(static_cast<std::size_t>(n * n * n * n));
    auto idx = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };
    for (std::size_t p = 0; p < M; ++p) {
        const Herm2 inv = m.gInv.at(p);
        cplx A[2][2]; // A[i][j] = g^{ij-bar}
        A[0][0] = inv.a;
        if (n == 2) {
            A[1][1] = inv.b;
            A[0][1] = std::conj(inv.c);
            A[1][0] = inv.c;
        }
        // R_{ij-bar k l-bar} = -dd g + g^{pq-bar} d_i g_{kq-bar} conj(d_j g_{lp-bar})
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        cplx r = -md.dd(i, j, k, l).v[p];
                        for (int q = 0; q < n; ++q)
                            for (int pp = 0; pp < n; ++pp)
                                r += A[pp][q] * md.d(i, k, q).v[p] *
                                     std::conj(md.d(j, l, pp).v[p]);
                        R[static_cast<std::size_t>(idx(i, j, k, l))] = r;
                    }
        double nrm = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l)
                        for (int a = 0; a < n; ++a)
                            for (int b = 0; b < n; ++b)
                                for (int c = 0; c < n; ++c)
                                    for (int dd = 0; dd < n; ++dd) {
                                        const cplx t =
                                            A[i][a] * A[b][j] * A[k][c] * A[dd][l] *
                                            R[static_cast<std::size_t>(idx(i, j, k, l))] *
                                            std::conj(R[static_cast<std::size_t>(idx(a, b, c, dd))]);
                                        nrm += t.real();
                                    }
        sup = std::max(sup, nrm);
    }
    return std::sqrt(std::max(sup, 0.0));
}

inline double ricciNorm(const MetricData& m) {
    const std::size_t M = m.grid().size();
    double sup = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        sup = std::max(sup, hermNormSq(m.gInv.at(i), m.ric.at(i), m.grid().n));
    return std::sqrt(std::max(sup, 0.0));
}

// sup |dd-bar S| with metric contractions (the type-II quantity)
inline double hessianSNorm(const MetricData& m) {
    HermitianField H = complexHessian(m.S);
    const std::size_t M = m.grid().size();
    double sup = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        sup = std::max(sup, hermNormSq(m.gInv.at(i), H.at(i), m.grid().n));
    return std::sqrt(std::max(sup, 0.0));
}

} // namespace calabi
