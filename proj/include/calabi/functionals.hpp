#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "calabi/geometry.hpp"

namespace calabi {

// All functionals are stored raw (no 1/V normalization beyond what the
// defining formulas carry); the report carries V so either convention is
// reconstructable downstream.
struct EnergyReport {
    double t = 0.0;
    double I = 0.0, J = 0.0;
    double D = 0.0;
    double E = 0.0;
    double j = 0.0;
    double nu = 0.0;
    double Ca = 0.0;
    double osc = 0.0;
    double lpS = 0.0;
    double distLower = 0.0;
    double pathLen = 0.0;
    double V = 0.0;

    static std::string csvHeader() {
        return "t,I,J,D,E,j,nu,Ca,osc,lpS,distLower,pathLen,V";
    }
    std::string csvRow() const {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                      t, I, J, D, E, j, nu, Ca, osc, lpS, distLower, pathLen, V);
        return buf;
    }
};

namespace detail {

// holomorphic gradient fields d_{z_c} phi
inline void holoGradient(const PotentialState& st, ComplexField grad[2]) {
    const SpectralGrid& g = st.bg->grid;
    for (int c = 0; c < g.n; ++c) {
        std::array<int, 2> holo{0, 0}, anti{0, 0};
        holo[c] = 1;
        grad[c] = ComplexField(g);
        grad[c].v = st.phiHat.v;
        applyComplexDerivativeSpectral(g, grad[c].v, holo, anti);
        fftInverse(g.dims(), g.N, grad[c].v);
    }
}

} // namespace detail

// Aubin functionals via the  i dphi ^ dbar-phi ^ omega^i ^ omega_phi^{n-1-i}
// expansion (quadratures of the gradient against mixed-metric densities).
inline std::pair<double, double> aubinIJ(const PotentialState& st, const MetricData& m) {
    const SpectralGrid& g = st.bg->grid;
    const int n = g.n;
    const double V = m.volume();
    ComplexField grad[2];
    detail::holoGradient(st, grad);

    double I = 0.0, J = 0.0;
    const std::size_t M = g.size();
    if (n == 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < M; ++i) s += std::norm(grad[0].v[i]);
        s *= g.cellWeight();
        I = s / V;
        J = 0.5 * s / V;
    } else {
        double s0 = 0.0, s1 = 0.0; // i = 0: pair with omega_phi; i = 1: pair with omega
        for (std::size_t i = 0; i < M; ++i) {
            Herm2 P;
            P.a = std::norm(grad[0].v[i]);
            P.b = std::norm(grad[1].v[i]);
            P.c = grad[0].v[i] * std::conj(grad[1].v[i]);
            s0 += mixedDet(P, m.g.at(i));
            s1 += mixedDet(P, st.bg->g0.at(i));
        }
        s0 *= g.cellWeight();
        s1 *= g.cellWeight();
        I = (s0 + s1) / V;
        J = (s0 / 3.0 + 2.0 * s1 / 3.0) / V;
    }
    return {I, J};
}

inline double dingD(const PotentialState& st, const MetricData& m) {
    const double V = m.volume();
    double mean = 0.0;
    const std::size_t M = st.bg->grid.size();
    for (std::size_t i = 0; i < M; ++i) mean += st.phi.v[i] * st.bg->detG0.v[i];
    mean *= st.bg->grid.cellWeight();
    return mean / V - aubinIJ(st, m).second;
}

inline double entropy(const MetricData& m) {
    double E = 0.0;
    const std::size_t M = m.grid().size();
    for (std::size_t i = 0; i < M; ++i) E += m.h.v[i] * m.detG.v[i];
    return E * m.grid().cellWeight();
}

inline double jFunctional(const PotentialState& st, const MetricData& m) {
    const KahlerBackground& bg = *st.bg;
    if (bg.flatBackground) return 0.0; // Ric(omega_flat) = 0
    const SpectralGrid& g = bg.grid;
    const int n = g.n;
    const std::size_t M = g.size();
    double acc = 0.0;
    if (n == 1) {
        for (std::size_t i = 0; i < M; ++i) acc += st.phi.v[i] * bg.ric0.d0.v[i];
    } else {
        for (std::size_t i = 0; i < M; ++i) {
            const Herm2 R = bg.ric0.at(i);
            const Herm2 g0 = bg.g0.at(i);
            Herm2 H = m.g.at(i); // dd-bar phi = g_phi - g0
            H.a -= g0.a;
            H.b -= g0.b;
            H.c -= g0.c;
            acc += st.phi.v[i] * (2.0 * mixedDet(R, g0) + mixedDet(R, H));
        }
    }
    return -acc * g.cellWeight() / bg.volume;
}

inline double calabiEnergy(const MetricData& m) {
    double s = 0.0;
    const std::size_t M = m.grid().size();
    const double sBar = m.sBar();
    for (std::size_t i = 0; i < M; ++i) {
        const double d = m.S.v[i] - sBar;
        s += d * d * m.detG.v[i];
    }
    return s * m.grid().cellWeight();
}

inline double kEnergy(const PotentialState& st, const MetricData& m) {
    return entropy(m) + m.sBar() * dingD(st, m) + jFunctional(st, m);
}

inline double oscillation(const RealField& phi) {
    double lo = phi.v[0], hi = phi.v[0];
    for (double x : phi.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

inline double lpNorm(const MetricData& m, double p) {
    double s = 0.0;
    const std::size_t M = m.grid().size();
    for (std::size_t i = 0; i < M; ++i) s += std::pow(std::abs(m.S.v[i]), p) * m.detG.v[i];
    return std::pow(s * m.grid().cellWeight(), 1.0 / p);
}

// d >= V^{-1/2} max{ int_{phi>0} phi omega_phi^n, -int_{phi<0} phi omega^n }
inline double distanceLowerBound(const PotentialState& st, const MetricData& m) {
    const std::size_t M = m.grid().size();
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        const double p = st.phi.v[i];
        if (p > 0.0)
            pos += p * m.detG.v[i];
        else if (p < 0.0)
            neg += p * st.bg->detG0.v[i];
    }
    const double w = m.grid().cellWeight();
    return std::max(pos * w, -neg * w) / std::sqrt(m.volume());
}

inline EnergyReport evaluateEnergies(const PotentialState& st, const MetricData& m, double t,
                                     double pathLen, double pnorm = 0.0) {
    EnergyReport r;
    r.t = t;
    auto [I, J] = aubinIJ(st, m);
    r.I = I;
    r.J = J;
    r.D = dingD(st, m);
    r.E = entropy(m);
    r.j = jFunctional(st, m);
    r.nu = r.E + m.sBar() * r.D + r.j;
    r.Ca = calabiEnergy(m);
    r.osc = oscillation(st.phi);
    r.lpS = lpNorm(m, pnorm > 0.0 ? pnorm : 2.0 * m.grid().n + 1.0);
    r.distLower = distanceLowerBound(st, m);
    r.pathLen = pathLen;
    r.V = m.volume();
    return r;
}

} // namespace calabi
