#include "ietnue/rational.hpp"

#include <cmath>

namespace ietnue {

Rational parse_rational(std::string_view text) {
    if (text.empty()) throw DomainError("parse_rational: empty string");
    const std::string s(text);
    Rational q;
    // mpq's base-10 reader accepts "a" and "a/b" but also tolerates leading
    // whitespace and partial garbage is rejected by the -1 return.
    if (mpq_set_str(q.get_mpq_t(), s.c_str(), 10) != 0)
        throw DomainError("parse_rational: malformed rational '" + s + "'");
    if (mpz_sgn(mpq_denref(q.get_mpq_t())) == 0)
        throw DomainError("parse_rational: zero denominator in '" + s + "'");
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }
std::string to_string(const BigInt& n) { return n.get_str(); }

double log10_approx(const BigInt& n) {
    if (n <= 0) throw DomainError("log10_approx: requires a positive integer");
    signed long exp2 = 0;
    const double mant = mpz_get_d_2exp(&exp2, n.get_mpz_t());
    // n = mant * 2^exp2 with mant in [0.5, 1).
    return std::log10(mant) + static_cast<double>(exp2) * std::log10(2.0);
}

double log10_approx(const Rational& q) {
    if (q == 0) throw DomainError("log10_approx: zero has no logarithm");
    BigInt num = q.get_num();
    if (num < 0) num = -num;
    return log10_approx(num) - log10_approx(BigInt(q.get_den()));
}

namespace {

// sqrt(n/d) = sqrt(n*d)/d; scale by 4^bits so the integer square root carries
// `bits` fractional bits.
BigInt scaled_isqrt(const Rational& x, unsigned bits) {
    BigInt t = x.get_num() * x.get_den();
    t <<= 2 * bits;
    BigInt root;
    mpz_sqrt(root.get_mpz_t(), t.get_mpz_t());
    return root;
}

} // namespace

Rational sqrt_lower(const Rational& x, unsigned scale_bits) {
    if (x < 0) throw DomainError("sqrt_lower: negative argument");
    Rational out(scaled_isqrt(x, scale_bits), x.get_den() << scale_bits);
    out.canonicalize();
    return out;
}

Rational sqrt_upper(const Rational& x, unsigned scale_bits) {
    if (x < 0) throw DomainError("sqrt_upper: negative argument");
    Rational out(scaled_isqrt(x, scale_bits) + 1, x.get_den() << scale_bits);
    out.canonicalize();
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

} // namespace ietnue
