#pragma once

#include <cmath>
#include <vector>

#include "calabi/errors.hpp"
#include "calabi/flow.hpp"

namespace calabi {

// Least-squares line on (t, log Ca); mu_fit = -slope/2 is the implied first
// eigenvalue of L when the tail is in the linear regime.
struct DecayFit {
    double t1 = 0.0, t2 = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double muFit = 0.0;
    int points = 0;
};

inline DecayFit fitDecay(const std::vector<std::pair<double, double>>& tca, double t1,
                         double t2) {
    if (!(t1 < t2)) throw InsufficientData("fit-decay: window must satisfy t1 < t2");
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, ca] : tca)
        if (t >= t1 && t <= t2 && ca > 1e-30) pts.emplace_back(t, std::log(ca));
    if (pts.size() < 10)
        throw InsufficientData("fit-decay: fewer than 10 usable records in window");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    if (det <= 0) throw InsufficientData("fit-decay: degenerate time window");
    DecayFit f;
    f.t1 = t1;
    f.t2 = t2;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ssRes = 0, ssTot = 0;
    const double yMean = sy / n;
    for (const auto& [x, y] : pts) {
        const double e = y - (f.intercept + f.slope * x);
        ssRes += e * e;
        ssTot += (y - yMean) * (y - yMean);
    }
    f.r2 = ssTot > 0 ? std::max(0.0, 1.0 - ssRes / ssTot) : 1.0;
    f.muFit = -f.slope / 2.0;
    f.points = static_cast<int>(pts.size());
    return f;
}

inline DecayFit fitDecay(const FlowTrace& trace, double t1, double t2) {
    std::vector<std::pair<double, double>> tca;
    tca.reserve(trace.records.size());
    for (const auto& r : trace.records) tca.emplace_back(r.t, r.energy.Ca);
    return fitDecay(tca, t1, t2);
}

} // namespace calabi
