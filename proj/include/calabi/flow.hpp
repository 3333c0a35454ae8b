#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "calabi/eigensolve.hpp"
#include "calabi/functionals.hpp"
#include "calabi/operators.hpp"
#include "calabi/rng.hpp"

namespace calabi {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------
struct PerturbationSpec {
    enum class Kind { Zero, Random, Modes, Checkpoint };
    struct Mode {
        std::array<int, 4> k{0, 0, 0, 0};
        double amp = 0.0;
    };
    Kind kind = Kind::Zero;
    double amplitude = 0.0; // sup norm of the random field
    int kmax = 3;
    std::vector<Mode> modes;
    std::string checkpointPath;
};

struct FlowConfig {
    int n = 1;
    int N = 64;
    PerturbationSpec perturb;
    double dt0 = 0.01;
    double tEnd = 1.0;
    double maxDt = 0.0;  // <= 0: no growth beyond dt0
    double cStab = 0.0;  // <= 0: auto, max(1, sup detRatio^{-1}) per step
    double safety = 0.9;
    double tol = 1e-5;   // step-doubling error bound per unit time
    int eigenCadence = 20;    // accepted steps between mu1 samples; < 0: off
    int recordCadence = 1;    // accepted steps per trace record
    int normCadence = 1;      // records between |Rm| / high-order channels
    int checkpointCadence = 0; // records between checkpoints; 0: off
    double terminalCaFactor = 1e-16;
    double driftBound = 1e-6;
    double lpExponent = 0.0; // 0: 2n+1
    std::uint64_t seed = 0;
    double resumeTime = 0.0;
    std::string outDir; // checkpoints target; empty disables checkpoints

    void validate() const {
        if (dt0 <= 0) throw IncompatibleData("flow: dt0 must be positive");
        if (tEnd <= 0) throw IncompatibleData("flow: tEnd must be positive");
        if (safety <= 0 || safety > 1) throw IncompatibleData("flow: safety in (0,1]");
    }
};

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------
struct TraceRecord {
    double t = 0.0, dt = 0.0;
    EnergyReport energy;
    double rmNorm = kNaN, ricNorm = kNaN, hessSNorm = kNaN;
    double gradS[4] = {kNaN, kNaN, kNaN, kNaN}; // sup |grad^i S|, i = 1..4
    double mu1 = kNaN, mu1Residual = kNaN;
    double dissipation = kNaN; // int |Hess S|^2 omega_phi^n
    double dDrift = 0.0;
    double margin = 0.0;
    double supTrRatio = 0.0, supAbsH = 0.0;
};

struct FlowTrace {
    int n = 1, N = 0;
    std::uint64_t seed = 0;
    double volume = 0.0;
    std::vector<TraceRecord> records;
    int acceptedSteps = 0;
    int rejections = 0;
    bool converged = false; // reached the terminal Calabi-energy tolerance
    bool driftBoundHeld = true;
    std::vector<std::string> checkpointFiles;

    static std::string csvHeader() {
        return "t,dt," + EnergyReport::csvHeader() +
               ",rmNorm,ricNorm,hessSNorm,grad1S,grad2S,grad3S,grad4S,mu1,mu1res,"
               "dissipation,dDrift,margin,supTrRatio,supAbsH";
    }
    std::string csvRow(const TraceRecord& r) const {
        auto num = [](double x) -> std::string {
            if (std::isnan(x)) return "";
            char b[32];
            std::snprintf(b, sizeof(b), "%.17g", x);
            return b;
        };
        std::string s = num(r.t) + "," + num(r.dt) + "," + r.energy.csvRow();
        for (double x : {r.rmNorm, r.ricNorm, r.hessSNorm, r.gradS[0], r.gradS[1], r.gradS[2],
                         r.gradS[3], r.mu1, r.mu1Residual, r.dissipation, r.dDrift, r.margin,
                         r.supTrRatio, r.supAbsH})
            s += "," + num(x);
        return s;
    }
    void writeCsv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write trace: " + path);
        os << "# n=" << n << " N=" << N << " seed=" << seed << " V=";
        char b[32];
        std::snprintf(b, sizeof(b), "%.17g", volume);
        os << b << " converged=" << (converged ? 1 : 0) << "\n";
        os << csvHeader() << "\n";
        for (const auto& r : records) os << csvRow(r) << "\n";
    }
};

inline FlowTrace readTraceCsv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open trace: " + path);
    FlowTrace tr;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty trace: " + path);
    if (line.rfind("# ", 0) == 0) {
        std::istringstream meta(line.substr(2));
        std::string tok;
        while (meta >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "n") tr.n = std::stoi(val);
            else if (key == "N") tr.N = std::stoi(val);
            else if (key == "seed") tr.seed = std::stoull(val);
            else if (key == "V") tr.volume = std::stod(val);
            else if (key == "converged") tr.converged = val == "1";
        }
        std::getline(is, line); // header
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        cells.resize(29, "");
        auto num = [](const std::string& s) { return s.empty() ? kNaN : std::stod(s); };
        TraceRecord r;
        int c = 0;
        r.t = num(cells[c++]);
        r.dt = num(cells[c++]);
        r.energy.t = num(cells[c++]);
        r.energy.I = num(cells[c++]);
        r.energy.J = num(cells[c++]);
        r.energy.D = num(cells[c++]);
        r.energy.E = num(cells[c++]);
        r.energy.j = num(cells[c++]);
        r.energy.nu = num(cells[c++]);
        r.energy.Ca = num(cells[c++]);
        r.energy.osc = num(cells[c++]);
        r.energy.lpS = num(cells[c++]);
        r.energy.distLower = num(cells[c++]);
        r.energy.pathLen = num(cells[c++]);
        r.energy.V = num(cells[c++]);
        r.rmNorm = num(cells[c++]);
        r.ricNorm = num(cells[c++]);
        r.hessSNorm = num(cells[c++]);
        for (int i = 0; i < 4; ++i) r.gradS[i] = num(cells[c++]);
        r.mu1 = num(cells[c++]);
        r.mu1Residual = num(cells[c++]);
        r.dissipation = num(cells[c++]);
        r.dDrift = num(cells[c++]);
        r.margin = num(cells[c++]);
        r.supTrRatio = num(cells[c++]);
        r.supAbsH = num(cells[c++]);
        tr.records.push_back(r);
        if (tr.volume == 0.0) tr.volume = r.energy.V;
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------
inline RealField buildPerturbation(const SpectralGrid& g, const PerturbationSpec& spec,
                                   std::uint64_t seed) {
    switch (spec.kind) {
        case PerturbationSpec::Kind::Zero:
            return RealField(g, 0.0);
        case PerturbationSpec::Kind::Random:
            return randomPerturbation(g, CounterRng{seed, 0x706872ULL}, spec.kmax,
                                      spec.amplitude);
        case PerturbationSpec::Kind::Modes: {
            RealField f(g, 0.0);
            for (const auto& mode : spec.modes) {
                forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
                    double phase = 0.0;
                    for (int a = 0; a < g.dims(); ++a) phase += mode.k[a] * x[a];
                    f.v[i] += mode.amp * std::cos(phase);
                });
            }
            return f;
        }
        case PerturbationSpec::Kind::Checkpoint:
            return readCheckpoint(spec.checkpointPath, g);
    }
    return RealField(g, 0.0);
}

// ---------------------------------------------------------------------------
// One semi-implicit step:
//   (1 + dt c Delta0^2) phi+ = phi + dt (S(phi) - Sbar + c Delta0^2 phi),
// solved diagonally in Fourier space, then dealiased.
// ---------------------------------------------------------------------------
inline RealField stepOnce(const SpectralGrid& g, const ComplexField& phiHat, const RealField& S,
                          double sBar, double dt, double c) {
    ComplexField sHat = toSpectral(S);
    ComplexField out(g);
    forEachMode(g, [&](std::size_t p, const std::array<int, 4>& k) {
        double k2 = 0.0;
        for (int a = 0; a < g.dims(); ++a) k2 += static_cast<double>(k[a]) * k[a];
        const double m = 0.25 * k2 * 0.25 * k2; // Delta0^2 symbol
        cplx rhs = sHat.v[p];
        if (k2 == 0.0) rhs -= sBar;
        out.v[p] = (phiHat.v[p] + dt * (rhs + c * m * phiHat.v[p])) / (1.0 + dt * c * m);
    });
    dealiasSpectral(g, out.v);
    return fromSpectralReal(out);
}

// step(state, dt): public single-step form (auto stabilization constant)
inline PotentialState step(const PotentialState& state, const MetricData& m, double dt) {
    double c = 1.0;
    for (double r : m.detRatio.v) c = std::max(c, 1.0 / r);
    RealField next = stepOnce(m.grid(), state.phiHat, m.S, m.sBar(), dt, c);
    if (!allFinite(next)) throw NanEncountered("flow step produced non-finite values");
    return PotentialState(*state.bg, std::move(next));
}

// ---------------------------------------------------------------------------
// Adaptive run
// ---------------------------------------------------------------------------
inline FlowTrace adaptiveRun(const FlowConfig& cfg,
                             const KahlerBackground* sharedBg = nullptr) {
    cfg.validate();
    static thread_local std::optional<SpectralGrid> gridHolder;
    static thread_local std::optional<KahlerBackground> bgHolder;
    const KahlerBackground* bg = sharedBg;
    if (!bg) {
        gridHolder.emplace(cfg.n, cfg.N);
        bgHolder.emplace(*gridHolder);
        bg = &*bgHolder;
    }
    const SpectralGrid& g = bg->grid;

    RealField phi0 = buildPerturbation(g, cfg.perturb, cfg.seed);
    PotentialState state(*bg, dealias(phi0));
    MetricData metric = assembleMetric(state);
    {
        // start in H_0: shift so D(phi_0) = 0 (D(phi + a) = D(phi) + a)
        const double d0 = dingD(state, metric);
        if (d0 != 0.0) {
            RealField shifted = state.phi;
            for (double& x : shifted.v) x -= d0;
            state = PotentialState(*bg, std::move(shifted));
            metric = assembleMetric(state);
        }
    }

    FlowTrace trace;
    trace.n = cfg.n;
    trace.N = cfg.N;
    trace.seed = cfg.seed;
    trace.volume = bg->volume;

    const double lp = cfg.lpExponent > 0 ? cfg.lpExponent : 2.0 * cfg.n + 1.0;
    const double terminalCa = cfg.terminalCaFactor * bg->volume;
    double ca = calabiEnergy(metric);
    const bool terminalActive = ca > terminalCa;
    const double d0ref = dingD(state, metric);

    double t = cfg.resumeTime;
    const double tEnd = cfg.resumeTime + cfg.tEnd;
    double dt = cfg.dt0;
    const double maxDt = cfg.maxDt > 0 ? cfg.maxDt : cfg.dt0;

    // pathLen tracks a genuine path from the zero potential to phi(t): the
    // straight segment 0 -> phi_0, then the flow path. This keeps
    // distLower <= pathLen a true inequality at every record.
    double pathLen = 0.0;
    {
        const int segs = 16;
        double prev = kNaN;
        for (int s = 0; s <= segs; ++s) {
            const double frac = static_cast<double>(s) / segs;
            double l2 = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                Herm2 h = bg->g0.at(i);
                const Herm2 gp = state.g.at(i);
                h.a += frac * (gp.a - h.a);
                h.b += frac * (gp.b - h.b);
                h.c += frac * (gp.c - h.c);
                l2 += state.phi.v[i] * state.phi.v[i] * hermDet(h, g.n);
            }
            const double f = std::sqrt(std::max(l2 * g.cellWeight(), 0.0));
            if (s > 0) pathLen += 0.5 * (prev + f) / segs;
            prev = f;
        }
    }
    std::optional<RealField> eigenWarm;
    int recordIndex = 0;
    long nextEigenStep = 0; // sample mu1 at the first record at/after this step

    auto record = [&](double usedDt) {
        TraceRecord r;
        r.t = t;
        r.dt = usedDt;
        r.energy = evaluateEnergies(state, metric, t, pathLen, lp);
        r.margin = state.positivityMargin;
        r.dDrift = dingD(state, metric) - d0ref;
        if (std::abs(r.dDrift) > cfg.driftBound * (1.0 + std::abs(d0ref)) * std::max(t, 1.0))
            trace.driftBoundHeld = false;
        double supTr = 0.0, supH = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            supTr = std::max(supTr, metric.trRatio.v[i]);
            supH = std::max(supH, std::abs(metric.h.v[i]));
        }
        r.supTrRatio = supTr;
        r.supAbsH = supH;

        LichOperator op(metric);
        r.dissipation = op.dirichlet(metric.S);
        r.ricNorm = ricciNorm(metric);
        r.hessSNorm = hessianSNorm(metric);
        r.gradS[0] = gradSupNorm(metric, metric.S);
        r.gradS[1] = secondDerivSupNorm(op, metric.S);
        if (cfg.normCadence > 0 && recordIndex % cfg.normCadence == 0) {
            r.rmNorm = riemannNorm(metric);
            r.gradS[2] = flatDerivSupNorm(metric.S, 3);
            r.gradS[3] = flatDerivSupNorm(metric.S, 4);
        }
        if (cfg.eigenCadence >= 0 && trace.acceptedSteps >= nextEigenStep) {
            nextEigenStep = trace.acceptedSteps + std::max(cfg.eigenCadence, 1);
            EigenOptions opts;
            opts.rng = CounterRng{cfg.seed, 0xe1637e6eULL};
            opts.warmStart = eigenWarm ? &*eigenWarm : nullptr;
            try {
                EigenResult er = firstEigenvalue(op, opts);
                r.mu1 = er.mu1;
                r.mu1Residual = er.residual;
                eigenWarm = std::move(er.eigenfield);
            } catch (const NonConvergence&) {
                // sample skipped; trace cell stays empty
            }
        }
        trace.records.push_back(std::move(r));

        if (cfg.checkpointCadence > 0 && !cfg.outDir.empty() &&
            recordIndex % cfg.checkpointCadence == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_%06d.calb", recordIndex);
            const std::string path = cfg.outDir + "/" + name;
            writeCheckpoint(path, state.phi);
            trace.checkpointFiles.push_back(path);
        }
        ++recordIndex;
    };

    // records are emitted per accepted step (cadence-th and final), so a
    // constant-step run to tEnd yields ceil(tEnd/dt0) records
    while (t < tEnd - 1e-14) {
        const double dtTry = std::min(dt, tEnd - t);
        double c = cfg.cStab;
        if (c <= 0) {
            c = 1.0;
            for (double r : metric.detRatio.v) c = std::max(c, 1.0 / r);
        }

        bool rejected = false;
        double err = 0.0;
        RealField full(g), fine(g);
        try {
            full = stepOnce(g, state.phiHat, metric.S, bg->sBar, dtTry, c);
            RealField halfPhi = stepOnce(g, state.phiHat, metric.S, bg->sBar, dtTry / 2, c);
            if (!allFinite(halfPhi)) throw NanEncountered("flow: non-finite state");
            PotentialState halfState(*bg, std::move(halfPhi));
            MetricData halfMetric = assembleMetric(halfState);
            fine = stepOnce(g, halfState.phiHat, halfMetric.S, bg->sBar, dtTry / 2, c);
            if (!allFinite(full) || !allFinite(fine))
                throw NanEncountered("flow: non-finite state");
            for (std::size_t i = 0; i < g.size(); ++i)
                err = std::max(err, std::abs(full.v[i] - fine.v[i]));
            if (err > cfg.tol * dtTry) rejected = true;
        } catch (const PositivityViolation&) {
            rejected = true;
        }

        if (!rejected) {
            try {
                PotentialState cand(*bg, std::move(fine));
                MetricData candMetric = assembleMetric(cand);
                const double caNew = calabiEnergy(candMetric);
                if (caNew > ca * (1.0 + 1e-12) + 1e-300) {
                    rejected = true;
                } else {
                    pathLen += dtTry * 0.5 * (std::sqrt(ca) + std::sqrt(caNew));
                    t += dtTry;
                    state = std::move(cand);
                    metric = std::move(candMetric);
                    ca = caNew;
                    ++trace.acceptedSteps;
                    const bool terminalHit = terminalActive && ca <= terminalCa;
                    if (trace.acceptedSteps % std::max(cfg.recordCadence, 1) == 0 ||
                        t >= tEnd - 1e-14 || terminalHit)
                        record(dtTry);
                    if (terminalHit) {
                        trace.converged = true;
                        break;
                    }
                    const double grow =
                        err > 0 ? cfg.safety * std::sqrt(cfg.tol * dtTry / err) : 2.0;
                    dt = std::min(maxDt, dtTry * std::min(2.0, std::max(grow, 0.3)));
                }
            } catch (const PositivityViolation&) {
                rejected = true;
            }
        }
        if (rejected) {
            ++trace.rejections;
            dt = dtTry / 2;
            if (dt < 1e-12)
                throw StepCollapse("flow: step size underflow at t = " + std::to_string(t));
        }
    }
    if (!terminalActive && ca <= terminalCa) trace.converged = true;
    return trace;
}

// ---------------------------------------------------------------------------
// Type I / II classification (Def. of curvature-bounded solutions)
// ---------------------------------------------------------------------------
enum class FlowType { TypeI, TypeII, Neither };

struct ClassifyResult {
    bool typeI = false;
    bool typeII = false;
    FlowType classification = FlowType::Neither;
    double supRm = 0.0;
    double supRmPlusHess = 0.0;
};

inline ClassifyResult classifyType(const FlowTrace& trace, double tau, double lambda) {
    if (trace.records.empty() || trace.records.back().t < tau - 1e-12)
        throw InsufficientTrace("classifyType: trace does not cover [0, tau]");
    ClassifyResult res;
    int samples = 0;
    for (const auto& r : trace.records) {
        if (r.t > tau + 1e-12) break;
        if (std::isnan(r.rmNorm)) continue;
        ++samples;
        res.supRm = std::max(res.supRm, r.rmNorm);
        const double h = std::isnan(r.hessSNorm) ? 0.0 : r.hessSNorm;
        res.supRmPlusHess = std::max(res.supRmPlusHess, r.rmNorm + h);
    }
    if (samples == 0) throw InsufficientTrace("classifyType: no curvature samples in [0, tau]");
    res.typeI = res.supRm <= lambda;
    res.typeII = res.supRmPlusHess <= lambda;
    res.classification =
        res.typeII ? FlowType::TypeII : (res.typeI ? FlowType::TypeI : FlowType::Neither);
    return res;
}

// ---------------------------------------------------------------------------
// Eigenvalue decay check:
//   (mu1(t) + Lambda^2) >= (mu1(0) + Lambda^2) exp(-26 int_0^t eps)
// with Lambda = sup |Ric| over the trace and eps(t) the recorded |dd-bar S|.
// A violation is reported, not thrown.
// ---------------------------------------------------------------------------
struct EigenDecayRow {
    double t = 0.0, lhs = 0.0, rhs = 0.0;
};

struct EigenDecayReport {
    double lambda = 0.0;
    int samples = 0;
    double minSlack = 0.0; // min over samples of lhs/rhs - 1
    bool violated = false;
    std::vector<EigenDecayRow> rows;
};

inline EigenDecayReport eigenDecayCheck(const FlowTrace& trace) {
    EigenDecayReport rep;
    double mu0 = kNaN;
    for (const auto& r : trace.records)
        if (!std::isnan(r.ricNorm)) rep.lambda = std::max(rep.lambda, r.ricNorm);
    double integral = 0.0;
    double tPrev = kNaN, epsPrev = kNaN;
    rep.minSlack = 1e300;
    for (const auto& r : trace.records) {
        if (!std::isnan(r.hessSNorm)) {
            if (!std::isnan(tPrev)) integral += 0.5 * (epsPrev + r.hessSNorm) * (r.t - tPrev);
            tPrev = r.t;
            epsPrev = r.hessSNorm;
        }
        if (std::isnan(r.mu1)) continue;
        if (std::isnan(mu0)) mu0 = r.mu1;
        const double lhs = r.mu1 + rep.lambda * rep.lambda;
        const double rhs = (mu0 + rep.lambda * rep.lambda) * std::exp(-26.0 * integral);
        rep.rows.push_back({r.t, lhs, rhs});
        ++rep.samples;
        rep.minSlack = std::min(rep.minSlack, lhs / rhs - 1.0);
    }
    if (rep.samples == 0) rep.minSlack = 0.0;
    rep.violated = rep.minSlack < -1e-9;
    return rep;
}

// ---------------------------------------------------------------------------
// Higher-derivative decay channels:  Chat_i = sup_{t >= T/2} of
// |grad^i S| / Ca^{1/(8(n+1))}, asserted finite and stable across the two
// halves of the fitting window. Report-only.
// ---------------------------------------------------------------------------
struct DerivDecayReport {
    double chat[4] = {0, 0, 0, 0};
    double windowRatio[4] = {1, 1, 1, 1}; // late/early window Chat ratio
    bool stable = true;
    bool trivial = false; // all channels identically zero (flat run)
};

inline DerivDecayReport derivativeDecayCheck(const FlowTrace& trace) {
    DerivDecayReport rep;
    if (trace.records.empty()) return rep;
    const double tEnd = trace.records.back().t;
    const double t0 = 0.5 * tEnd;
    const double tMid = 0.75 * tEnd;
    const double expo = 1.0 / (8.0 * (trace.n + 1.0));
    double early[4] = {0, 0, 0, 0}, late[4] = {0, 0, 0, 0};
    bool any = false;
    for (const auto& r : trace.records) {
        if (r.t < t0 || !(r.energy.Ca > 0)) continue;
        const double denom = std::pow(r.energy.Ca, expo);
        for (int i = 0; i < 4; ++i) {
            if (std::isnan(r.gradS[i])) continue;
            const double c = r.gradS[i] / denom;
            if (c > 0) any = true;
            rep.chat[i] = std::max(rep.chat[i], c);
            (r.t < tMid ? early[i] : late[i]) = std::max(r.t < tMid ? early[i] : late[i], c);
        }
    }
    rep.trivial = !any;
    for (int i = 0; i < 4; ++i) {
        if (early[i] > 0 && late[i] > 0) {
            rep.windowRatio[i] = late[i] / early[i];
            if (rep.windowRatio[i] > 1.5 || rep.windowRatio[i] < 1.0 / 1.5) rep.stable = false;
        }
        if (!std::isfinite(rep.chat[i])) rep.stable = false;
    }
    return rep;
}

// Hamilton interpolation on the flat background, constant 1 (Fourier side):
//   int |grad^j T|^2 <= (int |grad^k T|^2)^{j/k} (int |T|^2)^{1-j/k}.
// Returns the worst signed slack (negative means satisfied with room).
inline double hamiltonInterpolationSlack(const SpectralGrid& g, const CounterRng& rng,
                                         int trials, int j = 1, int k = 2) {
    double worst = -1e300;
    for (int t = 0; t < trials; ++t) {
        RealField T = randomBandLimited(g, rng.derive(static_cast<std::uint64_t>(t)), g.N / 3);
        const double lhs = flatSobolevSum(T, j);
        const double rhs = std::pow(flatSobolevSum(T, k), double(j) / k) *
                           std::pow(flatSobolevSum(T, 0), 1.0 - double(j) / k);
        worst = std::max(worst, (lhs - rhs) / std::max(rhs, 1e-300));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Run-fitted monitors (constant-free qualitative checks)
// ---------------------------------------------------------------------------
struct MonitorReport {
    std::string name;
    bool ok = true;
    double fitted[2] = {0, 0};
    double worst = 0.0;
};

// sup tr_{omega_phi} omega <= exp(a osc + b), a, b fitted over the run
inline MonitorReport chernLuMonitor(const FlowTrace& trace) {
    MonitorReport rep;
    rep.name = "chern-lu";
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : trace.records) {
        if (!(r.supTrRatio > 0)) continue;
        const double x = r.energy.osc, y = std::log(r.supTrRatio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return rep;
    const double det = n * sxx - sx * sx;
    const double a = det > 1e-30 ? (n * sxy - sx * sy) / det : 0.0;
    const double b = (sy - a * sx) / n;
    rep.fitted[0] = a;
    rep.fitted[1] = b;
    for (const auto& r : trace.records) {
        if (!(r.supTrRatio > 0)) continue;
        const double resid = std::log(r.supTrRatio) - (a * r.energy.osc + b);
        rep.worst = std::max(rep.worst, resid);
    }
    rep.ok = rep.worst <= 0.1 + 1e-12; // envelope holds up to a small additive slack
    return rep;
}

// sup|h| <= E + Chat (osc + ||S||_p), Chat fitted at run start, stable +-50%
inline MonitorReport hBoundMonitor(const FlowTrace& trace) {
    MonitorReport rep;
    rep.name = "h-bound";
    double c0 = kNaN;
    double lo = 1e300, hi = 0.0;
    for (const auto& r : trace.records) {
        const double denom = r.energy.osc + r.energy.lpS;
        if (denom < 1e-13) continue;
        const double c = std::max(r.supAbsH - r.energy.E, 0.0) / denom;
        if (std::isnan(c0)) c0 = c;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    if (std::isnan(c0)) return rep; // flat run: nothing to fit
    rep.fitted[0] = c0;
    rep.worst = hi > 0 ? hi / std::max(lo, 1e-300) : 1.0;
    rep.ok = hi <= 1.5 * std::max(c0, 1e-300) && lo >= 0.5 * c0 - 1e-12;
    return rep;
}

// E >= delta I - C with fitted delta = min E/I over the run, stable +-50%
inline MonitorReport entropyIMonitor(const FlowTrace& trace) {
    MonitorReport rep;
    rep.name = "entropy-vs-I";
    double lo = 1e300, hi = 0.0;
    for (const auto& r : trace.records) {
        if (!(r.energy.I > 1e-14)) continue;
        const double d = r.energy.E / r.energy.I;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    if (hi == 0.0) return rep;
    rep.fitted[0] = lo;
    rep.worst = hi / std::max(lo, 1e-300);
    rep.ok = lo > 0 && rep.worst <= 3.0;
    return rep;
}

// osc monitor of the zero-order estimate: osc(phi) - I bounded along the run
inline MonitorReport oscIMonitor(const FlowTrace& trace) {
    MonitorReport rep;
    rep.name = "osc-minus-I";
    double c0 = kNaN, hi = -1e300;
    for (const auto& r : trace.records) {
        const double c = r.energy.osc - r.energy.I;
        if (std::isnan(c0)) c0 = c;
        hi = std::max(hi, c);
    }
    rep.fitted[0] = std::isnan(c0) ? 0.0 : c0;
    rep.worst = hi;
    rep.ok = hi <= std::abs(rep.fitted[0]) * 1.5 + 0.1;
    return rep;
}

} // namespace calabi
