// Deterministic randomness. Every randomized routine in the library draws from
// a SeededRng passed in by the caller, so a (seed, config) pair fully
// reproduces any artifact. Big-integer uniforms are built from mt19937_64
// limbs with rejection, avoiding any platform-dependent distribution code.
#pragma once

#include <cstdint>
#include <random>

#include "ietnue/errors.hpp"
#include "ietnue/rational.hpp"

namespace ietnue {

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [lo, hi] inclusive; rejection sampling on the top bits.
    std::uint64_t uniform_u64(std::uint64_t lo, std::uint64_t hi) {
        if (lo > hi) throw DomainError("uniform_u64: empty range");
        std::uint64_t width = hi - lo;
        if (width == UINT64_MAX) return gen_();
        ++width;
        // Largest multiple of width that fits; reject draws beyond it.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % width;
        for (;;) {
            const std::uint64_t draw = gen_();
            if (draw < limit) return lo + draw % width;
        }
    }

    /// Uniform big integer on [lo, hi] inclusive.
    BigInt uniform_bigint(const BigInt& lo, const BigInt& hi) {
        if (lo > hi) throw DomainError("uniform_bigint: empty range");
        const BigInt width = hi - lo + 1;
        const std::size_t bits = mpz_sizeinbase(width.get_mpz_t(), 2);
        for (;;) {
            BigInt draw = random_bits(bits);
            if (draw < width) return lo + draw;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits; used only for reporting
    /// and sampling decisions, never for certified arithmetic.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

private:
    BigInt random_bits(std::size_t bits) {
        BigInt out = 0;
        std::size_t filled = 0;
        while (filled < bits) {
            out <<= 64;
            out += BigInt(static_cast<unsigned long>(gen_()));
            filled += 64;
        }
        // Trim the overshoot so the value is uniform on [0, 2^bits).
        out >>= (filled - bits);
        return out;
    }

    std::mt19937_64 gen_;
};

} // namespace ietnue
