// Interval exchange transformations with exact rational arithmetic.
//
// An exchange T on d subintervals is given by positive lengths lambda_0..
// lambda_{d-1} and a permutation pi: the domain [0, sum lambda) is cut into
// consecutive pieces I_j and reassembled so the piece at position j lands at
// position pi(j). Points map by pure translation inside each piece, so every
// orbit of a rational point stays exactly representable.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ietnue/permutation.hpp"
#include "ietnue/rational.hpp"

namespace ietnue {

class IntervalExchange {
public:
    IntervalExchange(std::vector<Rational> lengths, Permutation pi);

    int size() const { return pi_.size(); }
    const Rational& length(int j) const { return lengths_[j]; }
    const std::vector<Rational>& lengths() const { return lengths_; }
    const Permutation& permutation() const { return pi_; }
    const Rational& total() const { return total_; }

    /// Index j with x in I_j = [prefix_j, prefix_{j+1}). Throws DomainError if
    /// x is outside [0, total).
    int interval_of(const Rational& x) const;

    /// Left endpoint of I_j in the domain.
    const Rational& left_endpoint(int j) const { return prefix_[j]; }

    Rational apply(const Rational& x) const;
    Rational apply_inverse(const Rational& y) const;

    /// Displacement added to points of I_j; apply(x) = x + translation(interval_of(x)).
    const Rational& translation(int j) const { return translation_[j]; }

    /// The inverse exchange as a first-class object: lengths permuted by pi,
    /// permutation inverted. apply_inverse(y) == inverse().apply(y).
    IntervalExchange inverse() const;

    /// Same exchange rescaled to total length 1.
    IntervalExchange normalized() const;

private:
    std::vector<Rational> lengths_;
    Permutation pi_;
    Rational total_;
    std::vector<Rational> prefix_;      // d+1 cumulative left endpoints
    std::vector<Rational> translation_; // per-piece displacement
};

/// Visits of x, T(x), ..., T^{steps-1}(x) to each subinterval (d counts
/// summing to steps). Throws ResourceError once any coordinate's numerator or
/// denominator exceeds max_bits bits (orbit arithmetic budget).
std::vector<BigInt> orbit_visit_counts(const IntervalExchange& t, const Rational& x0,
                                       long steps, long max_bits = 1L << 22);

/// Visit counts normalized by the step count.
std::vector<Rational> orbit_frequencies(const IntervalExchange& t, const Rational& x0,
                                        long steps, long max_bits = 1L << 22);

/// JSON round-trip: {"lengths": ["1/4", ...], "permutation": "4321"}.
std::string to_json_string(const IntervalExchange& t);
IntervalExchange iet_from_json_string(std::string_view text);

} // namespace ietnue
