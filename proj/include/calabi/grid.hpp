#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calabi/errors.hpp"
#include "calabi/fft.hpp"

namespace calabi {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// SpectralGrid: periodic sampling lattice on the torus C^n / (2 pi Z)^{2n}
// with axes ordered (x1, y1, x2, y2), x1 slowest (row-major).
// ---------------------------------------------------------------------------
struct SpectralGrid {
    int n = 1; // complex dimension
    int N = 0; // samples per real axis

    SpectralGrid(int n_, int N_) : n(n_), N(N_) {
        if (n != 1 && n != 2)
            throw std::invalid_argument("SpectralGrid: n must be 1 or 2");
        if (N < 16 || (N & (N - 1)) != 0)
            throw std::invalid_argument("SpectralGrid: N must be a power of two >= 16");
        // fourth-order operators square the condition number; cap N
        const int cap = (n == 1) ? 512 : 64;
        if (N > cap)
            throw std::invalid_argument("SpectralGrid: N exceeds cap " + std::to_string(cap) +
                                        " for n = " + std::to_string(n));
    }

    int dims() const { return 2 * n; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dims(); ++a) s *= static_cast<std::size_t>(N);
        return s;
    }
    double period() const { return 2.0 * kPi; }
    double cellWeight() const { return std::pow(period() / N, dims()); }
    double spacing() const { return period() / N; }

    // integer wavenumber of axis index j in [0, N)
    int wave(int j) const { return j <= N / 2 ? j : j - N; }

    bool operator==(const SpectralGrid& o) const { return n == o.n && N == o.N; }
};

// ---------------------------------------------------------------------------
// Sample fields. Values are stored row-major in axis order (x1, y1, x2, y2).
// ---------------------------------------------------------------------------
struct RealField {
    const SpectralGrid* grid = nullptr;
    std::vector<double> v;

    RealField() = default;
    explicit RealField(const SpectralGrid& g, double fill = 0.0)
        : grid(&g), v(g.size(), fill) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

struct ComplexField {
    const SpectralGrid* grid = nullptr;
    std::vector<cplx> v;

    ComplexField() = default;
    explicit ComplexField(const SpectralGrid& g, cplx fill = cplx(0, 0))
        : grid(&g), v(g.size(), fill) {}

    std::size_t size() const { return v.size(); }
    cplx& operator[](std::size_t i) { return v[i]; }
    const cplx& operator[](std::size_t i) const { return v[i]; }
};

inline bool allFinite(const RealField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Lattice iteration: calls fn(flatIndex, k) with k the integer wavenumber
// per axis. Last axis varies fastest.
// ---------------------------------------------------------------------------
template <typename Fn>
inline void forEachMode(const SpectralGrid& g, Fn&& fn) {
    const int d = g.dims();
    const int N = g.N;
    std::array<int, 4> idx{0, 0, 0, 0};
    std::array<int, 4> k{0, 0, 0, 0};
    const std::size_t total = g.size();
    for (int a = 0; a < d; ++a) k[a] = 0;
    for (std::size_t flat = 0; flat < total; ++flat) {
        fn(flat, k);
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[a] < N) {
                k[a] = g.wave(idx[a]);
                break;
            }
            idx[a] = 0;
            k[a] = 0;
        }
    }
}

template <typename Fn>
inline void forEachNode(const SpectralGrid& g, Fn&& fn) {
    const int d = g.dims();
    const int N = g.N;
    const double h = g.spacing();
    std::array<int, 4> idx{0, 0, 0, 0};
    std::array<double, 4> x{0, 0, 0, 0};
    const std::size_t total = g.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        fn(flat, x);
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[a] < N) {
                x[a] = h * idx[a];
                break;
            }
            idx[a] = 0;
            x[a] = 0.0;
        }
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------
inline ComplexField toSpectral(const RealField& f) {
    ComplexField c(*f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) c.v[i] = cplx(f.v[i], 0.0);
    fftForward(f.grid->dims(), f.grid->N, c.v);
    return c;
}

inline ComplexField toSpectral(const ComplexField& f) {
    ComplexField c = f;
    fftForward(f.grid->dims(), f.grid->N, c.v);
    return c;
}

inline ComplexField fromSpectralComplex(const ComplexField& c) {
    ComplexField f = c;
    fftInverse(c.grid->dims(), c.grid->N, f.v);
    return f;
}

inline RealField fromSpectralReal(const ComplexField& c) {
    ComplexField f = fromSpectralComplex(c);
    RealField r(*c.grid);
    for (std::size_t i = 0; i < r.size(); ++i) r.v[i] = f.v[i].real();
    return r;
}

// ---------------------------------------------------------------------------
// Derivatives.  Spectral derivatives annihilate Nyquist planes (|k_a| = N/2)
// so that odd-order operators stay skew-adjoint on real data; dealiased
// fields carry no Nyquist content anyway.
// ---------------------------------------------------------------------------
inline int totalOrder(const std::array<int, 4>& o, int d) {
    int t = 0;
    for (int a = 0; a < d; ++a) t += o[a];
    return t;
}

inline void applyRealDerivativeSpectral(const SpectralGrid& g, std::vector<cplx>& c,
                                        const std::array<int, 4>& orders) {
    const int d = g.dims();
    const int half = g.N / 2;
    forEachMode(g, [&](std::size_t flat, const std::array<int, 4>& k) {
        cplx m(1.0, 0.0);
        for (int a = 0; a < d; ++a) {
            if (orders[a] == 0) continue;
            if (k[a] == half) {
                m = cplx(0.0, 0.0);
                break;
            }
            const cplx ik(0.0, static_cast<double>(k[a]));
            for (int r = 0; r < orders[a]; ++r) m *= ik;
        }
        c[flat] *= m;
    });
}

// d^{orders} f along the real axes (x1, y1, x2, y2); total order <= 6.
inline RealField derivative(const RealField& f, const std::array<int, 4>& orders) {
    const SpectralGrid& g = *f.grid;
    for (int a = 0; a < g.dims(); ++a)
        if (orders[a] < 0) throw std::invalid_argument("derivative: negative order");
    if (totalOrder(orders, g.dims()) > 6)
        throw std::invalid_argument("derivative: total order > 6");
    ComplexField c = toSpectral(f);
    applyRealDerivativeSpectral(g, c.v, orders);
    return fromSpectralReal(c);
}

// Multiplier of d_{z_c} resp. d_{zbar_c} at wavenumber k = (kx, ky) of
// coordinate c:  (i kx + ky)/2  resp.  (i kx - ky)/2.
inline cplx holoMultiplier(int kx, int ky) { return cplx(0.5 * ky, 0.5 * kx); }
inline cplx antiMultiplier(int kx, int ky) { return cplx(-0.5 * ky, 0.5 * kx); }

inline void applyComplexDerivativeSpectral(const SpectralGrid& g, std::vector<cplx>& c,
                                           const std::array<int, 2>& holo,
                                           const std::array<int, 2>& anti) {
    const int half = g.N / 2;
    const int n = g.n;
    forEachMode(g, [&](std::size_t flat, const std::array<int, 4>& k) {
        cplx m(1.0, 0.0);
        for (int cc = 0; cc < n; ++cc) {
            if (holo[cc] == 0 && anti[cc] == 0) continue;
            const int kx = k[2 * cc], ky = k[2 * cc + 1];
            if (kx == half || ky == half) {
                m = cplx(0.0, 0.0);
                break;
            }
            const cplx hm = holoMultiplier(kx, ky);
            const cplx am = antiMultiplier(kx, ky);
            for (int r = 0; r < holo[cc]; ++r) m *= hm;
            for (int r = 0; r < anti[cc]; ++r) m *= am;
        }
        c[flat] *= m;
    });
}

// d^{holo} dbar^{anti} f per complex coordinate; combined order <= 6.
inline ComplexField complexDerivative(const RealField& f, const std::array<int, 2>& holo,
                                      const std::array<int, 2>& anti) {
    const SpectralGrid& g = *f.grid;
    int t = 0;
    for (int cc = 0; cc < g.n; ++cc) {
        if (holo[cc] < 0 || anti[cc] < 0)
            throw std::invalid_argument("complexDerivative: negative order");
        t += holo[cc] + anti[cc];
    }
    if (t > 6) throw std::invalid_argument("complexDerivative: total order > 6");
    ComplexField c = toSpectral(f);
    applyComplexDerivativeSpectral(g, c.v, holo, anti);
    return fromSpectralComplex(c);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------
inline double integrate(const RealField& f, const RealField& density) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.v[i] * density.v[i];
    return s * f.grid->cellWeight();
}

inline double integrate(const RealField& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * f.grid->cellWeight();
}

inline double l2Norm(const RealField& f) {
    double s = 0.0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * f.grid->cellWeight());
}

inline double supNorm(const RealField& f) {
    double s = 0.0;
    for (double x : f.v) s = std::max(s, std::abs(x));
    return s;
}

inline bool isMeanZero(const RealField& f) {
    const double mean = integrate(f);
    double n2 = 0.0;
    for (double x : f.v) n2 += x * x;
    const double l2 = std::sqrt(n2) * std::sqrt(f.grid->cellWeight());
    return std::abs(mean) <= 1e-12 * std::max(l2, 1e-300);
}

// ---------------------------------------------------------------------------
// Dealiasing: two-thirds rule, per axis
// ---------------------------------------------------------------------------
inline void dealiasSpectral(const SpectralGrid& g, std::vector<cplx>& c) {
    const int cut = g.N / 3;
    const int d = g.dims();
    forEachMode(g, [&](std::size_t flat, const std::array<int, 4>& k) {
        for (int a = 0; a < d; ++a) {
            if (std::abs(k[a]) > cut) {
                c[flat] = cplx(0.0, 0.0);
                return;
            }
        }
    });
}

inline RealField dealias(const RealField& f) {
    ComplexField c = toSpectral(f);
    dealiasSpectral(*f.grid, c.v);
    return fromSpectralReal(c);
}

// ---------------------------------------------------------------------------
// Checkpoint format CALB1: magic "CALB1", u32 n, u32 N (little endian),
// N^{2n} IEEE-754 doubles in row-major axis order (x1, y1, x2, y2).
// ---------------------------------------------------------------------------
namespace ckpt {
inline void putU32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                          static_cast<unsigned char>((x >> 8) & 0xff),
                          static_cast<unsigned char>((x >> 16) & 0xff),
                          static_cast<unsigned char>((x >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline bool getU32(std::istream& is, std::uint32_t& x) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    x = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}
} // namespace ckpt

inline void writeCheckpoint(const std::string& path, const RealField& f) {
    static_assert(sizeof(double) == 8, "IEEE-754 doubles required");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write("CALB1", 5);
    ckpt::putU32(os, static_cast<std::uint32_t>(f.grid->n));
    ckpt::putU32(os, static_cast<std::uint32_t>(f.grid->N));
    os.write(reinterpret_cast<const char*>(f.v.data()),
             static_cast<std::streamsize>(sizeof(double) * f.size()));
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

// Reads a checkpoint; the caller owns the returned grid parameters via
// `nOut`/`NOut` and must bind the field to a matching long-lived grid.
inline std::vector<double> readCheckpointRaw(const std::string& path, int& nOut, int& NOut) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[5];
    if (!is.read(magic, 5) || std::string(magic, 5) != "CALB1")
        throw std::runtime_error("bad checkpoint magic in " + path);
    std::uint32_t n = 0, N = 0;
    if (!ckpt::getU32(is, n) || !ckpt::getU32(is, N))
        throw std::runtime_error("truncated checkpoint header in " + path);
    SpectralGrid probe(static_cast<int>(n), static_cast<int>(N)); // validates
    std::vector<double> vals(probe.size());
    if (!is.read(reinterpret_cast<char*>(vals.data()),
                 static_cast<std::streamsize>(sizeof(double) * vals.size())))
        throw std::runtime_error("truncated checkpoint data in " + path);
    for (double x : vals)
        if (!std::isfinite(x)) throw std::runtime_error("non-finite value in checkpoint " + path);
    nOut = static_cast<int>(n);
    NOut = static_cast<int>(N);
    return vals;
}

inline RealField readCheckpoint(const std::string& path, const SpectralGrid& grid) {
    int n = 0, N = 0;
    std::vector<double> vals = readCheckpointRaw(path, n, N);
    if (n != grid.n || N != grid.N)
        throw std::runtime_error("checkpoint grid mismatch: file has n=" + std::to_string(n) +
                                 " N=" + std::to_string(N));
    RealField f(grid);
    f.v = std::move(vals);
    return f;
}

} // namespace calabi
