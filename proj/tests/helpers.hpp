#pragma once

#include <cmath>

#include "calabi/geometry.hpp"
#include "calabi/rng.hpp"

namespace calabi::testing {

inline RealField cosField(const SpectralGrid& g, double amp, int axis) {
    RealField f(g);
    forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
        f.v[i] = amp * std::cos(x[axis]);
    });
    return f;
}

inline double maxDiff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

// Random band-limited potential scaled so the state's positivity margin is
// close to `targetMargin` (metrics stay well resolved at the given N).
inline RealField kahlerPerturbation(const KahlerBackground& bg, const CounterRng& rng, int kmax,
                                    double targetMargin) {
    const SpectralGrid& g = bg.grid;
    RealField phi = randomPerturbation(g, rng, kmax, 1.0);
    HermitianField hess = complexHessian(phi);
    double worst = 1e300;
    for (std::size_t i = 0; i < g.size(); ++i) {
        Herm2 h = bg.g0.at(i);
        const Herm2 p = hess.at(i);
        h.a += p.a;
        h.b += p.b;
        h.c += p.c;
        worst = std::min(worst, hermMinEig(h, g.n));
    }
    const double deficit = bg.margin0 - worst; // drop caused by unit-amplitude phi
    const double t = deficit > 0 ? (bg.margin0 - targetMargin) / deficit : 1.0;
    for (double& x : phi.v) x *= t;
    return phi;
}

inline PotentialState randomState(const KahlerBackground& bg, const CounterRng& rng, int kmax,
                                  double targetMargin) {
    return PotentialState(bg, kahlerPerturbation(bg, rng, kmax, targetMargin));
}

} // namespace calabi::testing
