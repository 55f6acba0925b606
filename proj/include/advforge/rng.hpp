#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "advforge/common.hpp"

namespace advforge {

// Deterministic random source. All sampling goes through this wrapper so
// reproducibility does not depend on libstdc++ distribution internals;
// only mt19937_64's raw output is used.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // uniform in [0,1)
    double unit() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // uniform integer in [0, n)
    uint64_t index(uint64_t n) {
        // modulo bias is irrelevant at our n << 2^64
        return n == 0 ? 0 : gen_() % n;
    }

    // standard normal via Box-Muller, one draw per call
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit(), u2 = unit();
        while (u1 <= 1e-300) u1 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    uint64_t raw() { return gen_(); }

    // Independent stream for a logical sub-task (parallel workers, per-cell
    // evaluation). Derivation is by hashing so streams do not overlap.
    Rng fork(uint64_t tag) {
        uint64_t s = gen_();
        uint64_t mix[2] = {s, tag};
        return Rng(fnv1a64(mix, sizeof mix));
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace advforge
