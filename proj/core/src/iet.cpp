#include "ietnue/iet.hpp"

#include <nlohmann/json.hpp>

namespace ietnue {

IntervalExchange::IntervalExchange(std::vector<Rational> lengths, Permutation pi)
    : lengths_(std::move(lengths)), pi_(std::move(pi)) {
    const int d = pi_.size();
    if (static_cast<int>(lengths_.size()) != d)
        throw DomainError("IntervalExchange: lengths/permutation size mismatch");
    for (const Rational& l : lengths_)
        if (l <= 0) throw DomainError("IntervalExchange: lengths must be positive");

    prefix_.assign(d + 1, Rational(0));
    for (int j = 0; j < d; ++j) prefix_[j + 1] = prefix_[j] + lengths_[j];
    total_ = prefix_[d];

    // Image left endpoints: piece j starts at the sum of the lengths of the
    // pieces that land before it, i.e. those k with pi(k) < pi(j).
    std::vector<Rational> image_prefix(d + 1, Rational(0));
    std::vector<Rational> by_target(d);
    for (int k = 0; k < d; ++k) by_target[pi_.image(k)] = lengths_[k];
    for (int v = 0; v < d; ++v) image_prefix[v + 1] = image_prefix[v] + by_target[v];
    translation_.resize(d);
    for (int j = 0; j < d; ++j) translation_[j] = image_prefix[pi_.image(j)] - prefix_[j];
}

int IntervalExchange::interval_of(const Rational& x) const {
    if (x < 0 || x >= total_) throw DomainError("interval_of: point outside domain");
    // d is tiny (2..4 in practice); linear scan beats anything clever.
    const int d = size();
    for (int j = 1; j <= d; ++j)
        if (x < prefix_[j]) return j - 1;
    throw DomainError("interval_of: unreachable");
}

Rational IntervalExchange::apply(const Rational& x) const {
    return x + translation_[interval_of(x)];
}

Rational IntervalExchange::apply_inverse(const Rational& y) const {
    return inverse().apply(y);
}

IntervalExchange IntervalExchange::inverse() const {
    // The image of piece j sits at slot pi(j); the inverse exchange has those
    // image pieces (ordered by slot) as its pieces and undoes the shuffle.
    const int d = size();
    std::vector<Rational> inv_lengths(d);
    for (int j = 0; j < d; ++j) inv_lengths[pi_.image(j)] = lengths_[j];
    return IntervalExchange(std::move(inv_lengths), pi_.inverse());
}

IntervalExchange IntervalExchange::normalized() const {
    std::vector<Rational> scaled(lengths_);
    for (Rational& l : scaled) l /= total_;
    return IntervalExchange(std::move(scaled), pi_);
}

namespace {

void check_bits(const Rational& x, long max_bits) {
    const std::size_t num_bits = mpz_sizeinbase(mpq_numref(x.get_mpq_t()), 2);
    const std::size_t den_bits = mpz_sizeinbase(mpq_denref(x.get_mpq_t()), 2);
    if (num_bits > static_cast<std::size_t>(max_bits) ||
        den_bits > static_cast<std::size_t>(max_bits))
        throw ResourceError("orbit: coordinate exceeded the bit budget");
}

} // namespace

std::vector<BigInt> orbit_visit_counts(const IntervalExchange& t, const Rational& x0,
                                       long steps, long max_bits) {
    if (steps < 0) throw DomainError("orbit_visit_counts: negative step count");
    std::vector<BigInt> counts(t.size(), BigInt(0));
    Rational x = x0;
    check_bits(x, max_bits);
    for (long n = 0; n < steps; ++n) {
        const int j = t.interval_of(x);
        counts[j] += 1;
        x += t.translation(j);
        check_bits(x, max_bits);
    }
    return counts;
}

std::vector<Rational> orbit_frequencies(const IntervalExchange& t, const Rational& x0,
                                        long steps, long max_bits) {
    if (steps <= 0) throw DomainError("orbit_frequencies: needs at least one step");
    const std::vector<BigInt> counts = orbit_visit_counts(t, x0, steps, max_bits);
    std::vector<Rational> freq(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
        freq[j] = Rational(counts[j]) / Rational(steps);
    return freq;
}

std::string to_json_string(const IntervalExchange& t) {
    nlohmann::json j;
    j["permutation"] = t.permutation().to_string();
    std::vector<std::string> ls;
    ls.reserve(t.size());
    for (int i = 0; i < t.size(); ++i) ls.push_back(to_string(t.length(i)));
    j["lengths"] = ls;
    return j.dump(2);
}

IntervalExchange iet_from_json_string(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError(std::string("iet_from_json_string: ") + e.what());
    }
    if (!j.contains("permutation") || !j.contains("lengths"))
        throw DomainError("iet_from_json_string: need 'permutation' and 'lengths'");
    Permutation pi = Permutation::parse(j["permutation"].get<std::string>());
    std::vector<Rational> lengths;
    for (const auto& item : j["lengths"])
        lengths.push_back(parse_rational(item.get<std::string>()));
    return IntervalExchange(std::move(lengths), std::move(pi));
}

} // namespace ietnue
