#pragma once

#include <array>
#include <cstdint>
#include <cmath>

#include "calabi/grid.hpp"

namespace calabi {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so any sample in any sweep cell is independently reproducible.
struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t at(std::uint64_t counter) const {
        return mix(mix(mix(seed) ^ stream) ^ counter);
    }

    // uniform in [0, 1)
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(at(counter) >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller on counters (2c, 2c+1)
    double gaussian(std::uint64_t counter) const {
        const double u1 = std::max(uniform(2 * counter), 0x1.0p-60);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    CounterRng derive(std::uint64_t substream) const {
        return CounterRng{seed, mix(stream ^ mix(substream + 0x5851f42d4c957f2dULL))};
    }
};

// Random real band-limited field: independent Gaussian amplitudes on every
// mode with 0 < max_a |k_a| <= kmax, Hermitian-symmetrized so the field is
// real. Mode coefficients are keyed by the mode tuple, not the grid size,
// so ensembles nest across resolutions.
inline RealField randomBandLimited(const SpectralGrid& g, const CounterRng& rng, int kmax) {
    if (kmax > g.N / 3) kmax = g.N / 3; // stay inside the dealiased band
    ComplexField c(g);
    const int d = g.dims();
    forEachMode(g, [&](std::size_t flat, const std::array<int, 4>& k) {
        int m = 0;
        bool zero = true;
        for (int a = 0; a < d; ++a) {
            m = std::max(m, std::abs(k[a]));
            if (k[a] != 0) zero = false;
        }
        if (zero || m > kmax) return;
        // canonical key shared by the +/- k pair
        std::uint64_t key = 0, keyNeg = 0;
        for (int a = 0; a < d; ++a) {
            key = key * 131071ULL + static_cast<std::uint64_t>(k[a] + 65536);
            keyNeg = keyNeg * 131071ULL + static_cast<std::uint64_t>(-k[a] + 65536);
        }
        const bool lead = key < keyNeg;
        const std::uint64_t ckey = lead ? key : keyNeg;
        const double re = rng.gaussian(2 * ckey);
        const double im = rng.gaussian(2 * ckey + 1);
        c.v[flat] = lead ? cplx(re, im) : cplx(re, -im);
    });
    return fromSpectralReal(c);
}

// Band-limited field rescaled to a prescribed sup norm; ampl = 0 gives the
// zero field.
inline RealField randomPerturbation(const SpectralGrid& g, const CounterRng& rng, int kmax,
                                    double ampl) {
    RealField f = randomBandLimited(g, rng, kmax);
    const double s = supNorm(f);
    if (ampl == 0.0 || s == 0.0) return RealField(g, 0.0);
    for (double& x : f.v) x *= ampl / s;
    return f;
}

} // namespace calabi
