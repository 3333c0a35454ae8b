#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "calabi/geometry.hpp"
#include "calabi/rng.hpp"
#include "helpers.hpp"

using namespace calabi;
using calabi::testing::cosField;
using calabi::testing::kahlerPerturbation;

namespace {

// flat complex Laplacian, Delta0 = sum_c d_{z_c} d_{zbar_c}
RealField flatLaplacian(const RealField& f) {
    const SpectralGrid& g = *f.grid;
    RealField out(g, 0.0);
    for (int c = 0; c < g.n; ++c) {
        std::array<int, 2> holo{0, 0}, anti{0, 0};
        holo[c] = 1;
        anti[c] = 1;
        ComplexField d = complexDerivative(f, holo, anti);
        for (std::size_t i = 0; i < g.size(); ++i) out.v[i] += d.v[i].real();
    }
    return out;
}

} // namespace

TEST_CASE("flat potential gives the identity metric") {
    SpectralGrid g(1, 32);
    KahlerBackground bg(g);
    PotentialState st(bg, RealField(g, 0.0));
    MetricData m = assembleMetric(st);
    CHECK(st.positivityMargin == Catch::Approx(1.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(m.detRatio.v[i] - 1.0) < 1e-14);
        CHECK(std::abs(m.h.v[i]) < 1e-14);
    }
    CHECK(supNorm(m.S) < 1e-12);
    CHECK(riemannNorm(m) < 1e-12);
    CHECK(ricciNorm(m) < 1e-12);
    CHECK(hessianSNorm(m) < 1e-12);
    CHECK(bg.volume == Catch::Approx(std::pow(2 * kPi, 2)));
}

TEST_CASE("single-mode potential: closed-form metric") {
    SpectralGrid g(1, 64);
    KahlerBackground bg(g);
    const double eps = 0.4;
    PotentialState st(bg, cosField(g, eps, 0));
    CHECK(st.positivityMargin == Catch::Approx(1.0 - eps / 4).epsilon(1e-12));
    MetricData m = assembleMetric(st);
    double dmax = 0.0;
    forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
        dmax = std::max(dmax, std::abs(m.g.d0.v[i] - (1.0 - eps / 4 * std::cos(x[0]))));
    });
    CHECK(dmax < 1e-12);

    SECTION("trace ratio is the scalar inverse in n=1") {
        double tmax = 0.0;
        forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
            tmax = std::max(tmax,
                            std::abs(m.trRatio.v[i] - 1.0 / (1.0 - eps / 4 * std::cos(x[0]))));
        });
        CHECK(tmax < 1e-12);
    }
}

TEST_CASE("non-Kahler data rejected at construction") {
    SpectralGrid g(1, 32);
    KahlerBackground bg(g);
    CHECK_THROWS_AS(PotentialState(bg, cosField(g, 5.0, 0)), PositivityViolation);
}

TEST_CASE("Ricci first-order expansion") {
    SpectralGrid g(1, 64);
    KahlerBackground bg(g);
    const double eps = 1e-3;
    MetricData m = assembleMetric(PotentialState(bg, cosField(g, eps, 0)));
    double dmax = 0.0;
    forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
        dmax = std::max(dmax, std::abs(m.ric.d0.v[i] + eps / 16 * std::cos(x[0])));
    });
    // next order is (eps^2/64) cos 2x
    CHECK(dmax < eps * eps / 32);
}

TEST_CASE("scalar curvature linearizes to -Delta0^2 phi") {
    SECTION("n=1 single mode, eps = 1e-3") {
        SpectralGrid g(1, 64);
        KahlerBackground bg(g);
        const double eps = 1e-3;
        MetricData m = assembleMetric(PotentialState(bg, cosField(g, eps, 0)));
        double dmax = 0.0;
        forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
            dmax = std::max(dmax, std::abs(m.S.v[i] + eps / 16 * std::cos(x[0])));
        });
        CHECK(dmax < 1e-7);
    }
    SECTION("n=2 single mode on the first coordinate") {
        SpectralGrid g(2, 16);
        KahlerBackground bg(g);
        const double eps = 1e-3;
        MetricData m = assembleMetric(PotentialState(bg, cosField(g, eps, 0)));
        double dmax = 0.0;
        forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
            dmax = std::max(dmax, std::abs(m.S.v[i] + eps / 16 * std::cos(x[0])));
        });
        CHECK(dmax < 1e-7);
    }
    SECTION("random band-limited directions stay O(eps^2)") {
        SpectralGrid g(1, 128);
        KahlerBackground bg(g);
        for (int t = 0; t < 20; ++t) {
            CounterRng rng{321, static_cast<std::uint64_t>(t)};
            RealField dir = randomPerturbation(g, rng, 6, 1.0);
            RealField lap2 = flatLaplacian(flatLaplacian(dir));
            double rPrev = -1.0;
            for (double eps : {1e-2, 1e-3, 1e-4}) {
                RealField phi = dir;
                for (double& x : phi.v) x *= eps;
                MetricData m = assembleMetric(PotentialState(bg, phi));
                RealField resid = m.S;
                for (std::size_t i = 0; i < g.size(); ++i) resid.v[i] += eps * lap2.v[i];
                const double r = supNorm(resid) / (eps * eps);
                if (rPrev >= 0.0) CHECK(r < 2.0 * rPrev + 0.1);
                rPrev = r;
            }
        }
    }
}

TEST_CASE("class constraint: scalar curvature has zero mean") {
    for (int n : {1, 2}) {
        SpectralGrid g(n, n == 1 ? 64 : 32);
        KahlerBackground bg(g);
        for (int t = 0; t < 5; ++t) {
            CounterRng rng{88, static_cast<std::uint64_t>(10 * n + t)};
            RealField phi = kahlerPerturbation(bg, rng, 3, n == 1 ? 0.7 : 0.85);
            MetricData m = assembleMetric(PotentialState(bg, phi));
            double total = 0.0, ca = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                total += m.S.v[i] * m.detG.v[i];
                ca += m.S.v[i] * m.S.v[i] * m.detG.v[i];
            }
            total *= g.cellWeight();
            ca *= g.cellWeight();
            CHECK(std::abs(total) <= 1e-8 * std::sqrt(ca * bg.volume) + 1e-12);
        }
    }
}

TEST_CASE("metric inverse is exact nodewise") {
    SpectralGrid g(2, 16);
    KahlerBackground bg(g);
    CounterRng rng{9, 4};
    MetricData m = assembleMetric(PotentialState(bg, randomPerturbation(g, rng, 2, 0.3)));
    double dmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Herm2 gg = m.g.at(i);
        const Herm2 iv = m.gInv.at(i);
        // (g * inv) - id
        const cplx e11 = gg.a * iv.a + gg.c * std::conj(iv.c) - 1.0;
        const cplx e12 = gg.a * iv.c + gg.c * iv.b;
        const cplx e22 = std::conj(gg.c) * iv.c + gg.b * iv.b - 1.0;
        dmax = std::max({dmax, std::abs(e11), std::abs(e12), std::abs(e22)});
    }
    CHECK(dmax < 1e-10);
}

TEST_CASE("Riemann norm") {
    SECTION("n=1 equals |S| pointwise-sup") {
        SpectralGrid g(1, 64);
        KahlerBackground bg(g);
        CounterRng rng{7, 1};
        MetricData m = assembleMetric(testing::randomState(bg, rng, 2, 0.9));
        CHECK(riemannNorm(m) == Catch::Approx(supNorm(m.S)).epsilon(1e-8));
    }
    SECTION("first-order scaling in the potential") {
        SpectralGrid g(1, 64);
        KahlerBackground bg(g);
        CounterRng rng{7, 2};
        RealField dir = randomPerturbation(g, rng, 4, 1.0);
        auto rmAt = [&](double eps) {
            RealField phi = dir;
            for (double& x : phi.v) x *= eps;
            return riemannNorm(assembleMetric(PotentialState(bg, phi)));
        };
        CHECK(rmAt(2e-3) / rmAt(1e-3) == Catch::Approx(2.0).epsilon(0.01));
    }
    SECTION("n=2 nonzero and finite for a generic potential") {
        SpectralGrid g(2, 16);
        KahlerBackground bg(g);
        CounterRng rng{7, 3};
        MetricData m = assembleMetric(PotentialState(bg, randomPerturbation(g, rng, 2, 0.2)));
        const double rm = riemannNorm(m);
        CHECK(rm > 0.0);
        CHECK(std::isfinite(rm));
        CHECK(rm >= supNorm(m.S) / (g.n * g.n)); // |S| = |tr contraction| <= n^2 |Rm|-ish sanity
    }
}

TEST_CASE("Hessian-of-S norm") {
    SpectralGrid g(1, 128);
    KahlerBackground bg(g);

    SECTION("first-order value for a single mode") {
        const double eps = 1e-3;
        MetricData m = assembleMetric(PotentialState(bg, cosField(g, eps, 0)));
        CHECK(std::abs(hessianSNorm(m) - eps / 64) < eps * eps);
    }
    SECTION("matches a finite-difference stencil oracle") {
        CounterRng rng{55, 0};
        MetricData m = assembleMetric(PotentialState(bg, randomPerturbation(g, rng, 2, 0.005)));
        // 4th-order centered second differences of S on the grid
        const int N = g.N;
        auto wrap = [N](int i) { return (i % N + N) % N; };
        auto at = [&](int ix, int iy) {
            return m.S.v[static_cast<std::size_t>(wrap(ix)) * N + wrap(iy)];
        };
        const double h = g.spacing();
        double sup = 0.0;
        for (int ix = 0; ix < N; ++ix)
            for (int iy = 0; iy < N; ++iy) {
                const double sxx = (-at(ix + 2, iy) + 16 * at(ix + 1, iy) - 30 * at(ix, iy) +
                                    16 * at(ix - 1, iy) - at(ix - 2, iy)) /
                                   (12 * h * h);
                const double syy = (-at(ix, iy + 2) + 16 * at(ix, iy + 1) - 30 * at(ix, iy) +
                                    16 * at(ix, iy - 1) - at(ix, iy - 2)) /
                                   (12 * h * h);
                const double lap = 0.25 * (sxx + syy); // d_z d_zbar S
                const std::size_t flat = static_cast<std::size_t>(ix) * N + iy;
                const double contracted = std::abs(lap) * m.gInv.at(flat).a;
                sup = std::max(sup, contracted);
            }
        CHECK(std::abs(hessianSNorm(m) - sup) < 1e-6);
    }
}

TEST_CASE("trace ratio AM-GM bound") {
    for (int n : {1, 2}) {
        SpectralGrid g(n, n == 1 ? 32 : 16);
        KahlerBackground bg(g);
        CounterRng rng{23, static_cast<std::uint64_t>(n)};
        MetricData m = assembleMetric(PotentialState(bg, randomPerturbation(g, rng, 2, 0.25)));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double tr1 = m.trRatio.v[i];
            const double tr2 = contractHerm(bg.gInv0.at(i), m.g.at(i), n); // tr_omega omega_phi
            CHECK(tr1 * tr2 >= n * n - 1e-12);
        }
    }
}

TEST_CASE("class volume is potential-independent") {
    SpectralGrid g(2, 16);
    KahlerBackground bg(g);
    CounterRng rng{31, 8};
    MetricData m = assembleMetric(PotentialState(bg, randomPerturbation(g, rng, 2, 0.3)));
    CHECK(integrate(m.detG) == Catch::Approx(bg.volume).epsilon(1e-10));
}

TEST_CASE("curved background") {
    SpectralGrid g(1, 64);
    RealField psi(g);
    forEachNode(g, [&](std::size_t i, const std::array<double, 4>& x) {
        psi.v[i] = 0.8 * std::cos(x[0]) + 0.5 * std::sin(x[1]);
    });
    KahlerBackground bg(g, psi);
    CHECK(bg.margin0 > 0.0);
    CHECK(!bg.flatBackground);
    CHECK(std::abs(bg.sBarResidual) < 1e-8);

    // h is the log volume ratio relative to omega, not omega_flat
    CounterRng rng{3, 3};
    MetricData m = assembleMetric(PotentialState(bg, randomPerturbation(g, rng, 3, 0.1)));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(m.h.v[i] - std::log(m.detG.v[i] / bg.detG0.v[i])) < 1e-13);
    }

    // background too steep to stay Kahler is rejected
    CHECK_THROWS_AS(KahlerBackground(g, cosField(g, 5.0, 0)), PositivityViolation);
}
