// Exact arithmetic primitives: arbitrary-precision integers and rationals
// (GMP C++ classes) plus the handful of helpers the rest of the library needs.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

#include "ietnue/errors.hpp"

namespace ietnue {

using BigInt = mpz_class;
using Rational = mpq_class;

/// Parse "a", "-a", or "a/b" into a canonical rational. Throws DomainError on
/// malformed input or zero denominator.
Rational parse_rational(std::string_view text);

/// Canonical decimal string, "a" or "a/b".
std::string to_string(const Rational& q);
std::string to_string(const BigInt& n);

/// log10 of a huge positive integer without converting it to double
/// (mpz_get_d_2exp keeps the full exponent). Throws DomainError for n <= 0.
double log10_approx(const BigInt& n);

/// log10 |q| for a nonzero rational.
double log10_approx(const Rational& q);

inline BigInt pow_int(const BigInt& base, unsigned long e) {
    BigInt out;
    mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
    return out;
}

inline BigInt pow10(unsigned long e) { return pow_int(BigInt(10), e); }

/// Rational lower/upper bounds on sqrt(x) for x >= 0, tight to 2^-scale_bits.
/// Lets callers compare square roots exactly without floating point.
Rational sqrt_lower(const Rational& x, unsigned scale_bits = 96);
Rational sqrt_upper(const Rational& x, unsigned scale_bits = 96);

/// FNV-1a 64-bit content hash; used to key cache entries and stamp artifacts.
std::uint64_t fnv1a64(std::string_view bytes);

/// Fixed-width lowercase hex of a 64-bit hash.
std::string hash_hex(std::uint64_t h);

} // namespace ietnue
