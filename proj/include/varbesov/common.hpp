#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace varbesov {

/// Thrown when a caller violates a documented precondition.
struct precondition_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a certified bound fails its in-run audit.
struct audit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by the CLI layer for malformed configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Axis-aligned box; empty when any hi[i] < lo[i] or when dim() == 0.
struct Box {
    std::vector<double> lo, hi;

    Box() = default;
    Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi dimension mismatch");
    }

    static Box unit_cube(int d) {
        return Box(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    }

    int dim() const { return static_cast<int>(lo.size()); }

    bool empty() const {
        if (lo.empty()) return true;
        for (size_t i = 0; i < lo.size(); ++i)
            if (hi[i] < lo[i]) return true;
        return false;
    }

    bool contains(const std::vector<double>& x) const {
        if (empty() || x.size() != lo.size()) return false;
        for (size_t i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    Box intersect(const Box& o) const {
        if (dim() != o.dim()) throw std::invalid_argument("Box::intersect: dimension mismatch");
        Box r = *this;
        for (int i = 0; i < dim(); ++i) {
            r.lo[i] = std::max(lo[i], o.lo[i]);
            r.hi[i] = std::min(hi[i], o.hi[i]);
        }
        return r;
    }

    double volume() const {
        if (empty()) return 0.0;
        double v = 1.0;
        for (size_t i = 0; i < lo.size(); ++i) v *= (hi[i] - lo[i]);
        return v;
    }
};

inline long long ipow(long long b, int e) {
    long long r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// SplitMix64; used to derive independent seed streams.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
    uint64_t s = base ^ (0x100000001b3ULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// xoshiro-free minimal generator: deterministic across platforms and
/// standard-library versions (std:: distributions are not portable).
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed ^ 0x5851f42d4c957f2dULL) {
        for (int i = 0; i < 4; ++i) splitmix64(state_);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Box-Muller; one fresh pair per two calls is not cached on purpose
    /// (keeps replay independent of call parity).
    double normal() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    int uniform_int(int n) {  // uniform on {0, ..., n-1}
        return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

  private:
    uint64_t state_;
};

inline double sqr(double x) { return x * x; }

}  // namespace varbesov
