#pragma once

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace calabi {

using cplx = std::complex<double>;

// Thin c2c FFTW wrapper for the d-dimensional N^d lattice, d = 2n.
// Plans are cached per (d, N) and shared; execution goes through
// thread-local fftw_malloc'd workspaces so concurrent transforms on
// different threads never touch the same buffers.
namespace fftdetail {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::size_t size = 0;
};

inline std::mutex& planMutex() {
    static std::mutex m;
    return m;
}

inline const PlanPair& plans(int d, int N) {
    static std::map<std::pair<int, int>, PlanPair> cache;
    std::lock_guard<std::mutex> lock(planMutex());
    auto key = std::make_pair(d, N);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::size_t size = 1;
    for (int a = 0; a < d; ++a) size *= static_cast<std::size_t>(N);
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size));
    std::vector<int> dims(static_cast<std::size_t>(d), N);
    PlanPair p;
    p.size = size;
    p.fwd = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
    return cache.emplace(key, p).first->second;
}

struct Workspace {
    fftw_complex* data = nullptr;
    std::size_t size = 0;
    ~Workspace() {
        if (data) fftw_free(data);
    }
    fftw_complex* get(std::size_t n) {
        if (size < n) {
            if (data) fftw_free(data);
            data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
            size = n;
        }
        return data;
    }
};

inline fftw_complex* workspace(std::size_t n) {
    thread_local Workspace ws;
    return ws.get(n);
}

} // namespace fftdetail

// Forward transform, normalized so coefficients are mode amplitudes:
// f(x) = sum_k c_k exp(i k.x).  In-place on the vector.
inline void fftForward(int d, int N, std::vector<cplx>& v) {
    const auto& p = fftdetail::plans(d, N);
    fftw_complex* buf = fftdetail::workspace(p.size);
    std::memcpy(static_cast<void*>(buf), static_cast<const void*>(v.data()),
                sizeof(cplx) * p.size);
    fftw_execute_dft(p.fwd, buf, buf);
    const double scale = 1.0 / static_cast<double>(p.size);
    auto* out = reinterpret_cast<cplx*>(buf);
    for (std::size_t i = 0; i < p.size; ++i) v[i] = out[i] * scale;
}

// Inverse of fftForward (no extra scaling).
inline void fftInverse(int d, int N, std::vector<cplx>& v) {
    const auto& p = fftdetail::plans(d, N);
    fftw_complex* buf = fftdetail::workspace(p.size);
    std::memcpy(static_cast<void*>(buf), static_cast<const void*>(v.data()),
                sizeof(cplx) * p.size);
    fftw_execute_dft(p.bwd, buf, buf);
    std::memcpy(static_cast<void*>(v.data()), static_cast<const void*>(buf),
                sizeof(cplx) * p.size);
}

} // namespace calabi
