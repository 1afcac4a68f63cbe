#include "ietnue/paths.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ietnue/errors.hpp"

namespace ietnue {

namespace {

BigInt require_nonneg(const BigInt& n, const char* where) {
    if (n < 0) throw DomainError(std::string(where) + ": negative count");
    return n;
}

long checked_long(const BigInt& n, const char* where) {
    if (!n.fits_slong_p()) throw ResourceError(std::string(where) + ": count too large");
    return n.get_si();
}

} // namespace

Matrix ladder_matrix(LadderKind kind, const BigInt& n) {
    require_nonneg(n, "ladder_matrix");
    Matrix m = Matrix::identity(4);
    switch (kind) {
    case LadderKind::Lower1:
        m.at(3, 0) = n; m.at(3, 1) = n; m.at(3, 2) = n;
        return m;
    case LadderKind::Upper1:
        m.at(2, 2) = n + 1; m.at(2, 3) = n;
        m.at(3, 0) = 1; m.at(3, 1) = 1; m.at(3, 2) = 1; m.at(3, 3) = 1;
        return m;
    case LadderKind::Lower2:
        m.at(0, 1) = n; m.at(0, 2) = n; m.at(0, 3) = n;
        return m;
    case LadderKind::Upper2:
        m.at(0, 0) = 1; m.at(0, 1) = 1; m.at(0, 2) = 1; m.at(0, 3) = 1;
        m.at(1, 0) = n; m.at(1, 1) = n + 1; m.at(1, 2) = 0; m.at(1, 3) = 0;
        return m;
    }
    throw DomainError("ladder_matrix: unknown kind");
}

std::vector<RauzyMove> ladder_word(LadderKind kind, long n) {
    if (n < 0) throw DomainError("ladder_word: negative count");
    std::vector<RauzyMove> w;
    switch (kind) {
    case LadderKind::Lower1:
        w.assign(static_cast<std::size_t>(3 * n), RauzyMove::B);
        return w;
    case LadderKind::Upper1:
        w.assign(2, RauzyMove::B);
        w.insert(w.end(), static_cast<std::size_t>(n), RauzyMove::A);
        w.push_back(RauzyMove::B);
        return w;
    case LadderKind::Lower2:
        w.assign(static_cast<std::size_t>(3 * n), RauzyMove::A);
        return w;
    case LadderKind::Upper2:
        w.assign(2, RauzyMove::A);
        w.insert(w.end(), static_cast<std::size_t>(n), RauzyMove::B);
        w.push_back(RauzyMove::A);
        return w;
    }
    throw DomainError("ladder_word: unknown kind");
}

namespace {

/// Ladder exponents realizing shear word A followed by the U^r*L tail: the
/// first lower exponent is used as-is, every later one drops by one (the
/// trailing move of each upper ladder supplies the missing lower shear).
std::vector<BigInt> block_exponents(const Matrix& a, const BigInt& r) {
    if (r < 1) throw DomainError("block: repeat count must be >= 1");
    const std::vector<BigInt> padded = lower_first_exponents(decompose(a));
    if (padded.size() >= 3 && padded.back() == 0)
        throw DomainError("block: shear word ends with the upper shear; "
                          "no ladder word realizes it");
    std::vector<BigInt> exps;
    exps.reserve(padded.size() + 1);
    for (std::size_t i = 0; i < padded.size(); ++i) {
        BigInt e = padded[i];
        if (i % 2 == 0 && i > 0) e -= 1;
        exps.push_back(std::move(e));
    }
    exps.push_back(r); // final upper ladder
    return exps;
}

LadderKind kind_for(BlockSide side, bool lower_ladder) {
    if (side == BlockSide::Lower)
        return lower_ladder ? LadderKind::Lower1 : LadderKind::Upper1;
    return lower_ladder ? LadderKind::Lower2 : LadderKind::Upper2;
}

} // namespace

std::vector<std::pair<LadderKind, BigInt>> block_ladder_factors(const Matrix& a,
                                                                const BigInt& r,
                                                                BlockSide side) {
    const std::vector<BigInt> exps = block_exponents(a, r);
    std::vector<std::pair<LadderKind, BigInt>> factors;
    factors.reserve(exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i)
        factors.emplace_back(kind_for(side, i % 2 == 0), exps[i]);
    return factors;
}

Matrix block_matrix(const Matrix& a, const BigInt& r, BlockSide side) {
    Matrix out = Matrix::identity(4);
    for (const auto& [kind, n] : block_ladder_factors(a, r, side))
        out = out * ladder_matrix(kind, n);
    return out;
}

std::vector<RauzyMove> block_word(const Matrix& a, long r, BlockSide side) {
    std::vector<RauzyMove> word;
    for (const auto& [kind, n] : block_ladder_factors(a, BigInt(r), side)) {
        const std::vector<RauzyMove> part = ladder_word(kind, checked_long(n, "block_word"));
        word.insert(word.end(), part.begin(), part.end());
    }
    return word;
}

long ExponentPoly::eval_floor(long i) const {
    const Rational v = c0 + c1 * Rational(i) + c2 * Rational(i) * Rational(i);
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), v.get_num().get_mpz_t(), v.get_den().get_mpz_t());
    return checked_long(q, "ExponentPoly::eval_floor");
}

namespace {

BigInt power_of_base(long base, long e, const char* where) {
    if (e < 0) throw DomainError(std::string(where) + ": negative exponent at this slot");
    if (base < 2) throw DomainError(std::string(where) + ": base must be >= 2");
    return pow_int(BigInt(base), static_cast<unsigned long>(e));
}

std::pair<BigInt, BigInt> scaled_window(const Rational& lo, const Rational& hi,
                                        const BigInt& unit) {
    // [ceil(lo*unit), floor(hi*unit)]
    const Rational l = lo * Rational(unit);
    const Rational h = hi * Rational(unit);
    BigInt lo_i, hi_i;
    mpz_cdiv_q(lo_i.get_mpz_t(), l.get_num().get_mpz_t(), l.get_den().get_mpz_t());
    mpz_fdiv_q(hi_i.get_mpz_t(), h.get_num().get_mpz_t(), h.get_den().get_mpz_t());
    if (lo_i < 1) lo_i = 1;
    if (hi_i < lo_i)
        throw DomainError("scale window: empty after rounding");
    return {lo_i, hi_i};
}

} // namespace

std::pair<BigInt, BigInt> ScaleProfile::a_range(int slot) const {
    const BigInt unit = power_of_base(base, a_exponent.eval_floor(slot), "a_range");
    return {unit, multiplier * unit};
}

std::pair<BigInt, BigInt> ScaleProfile::r_range(int slot) const {
    const BigInt unit = power_of_base(base, r_exponent.eval_floor(slot), "r_range");
    return {unit, multiplier * unit};
}

std::pair<BigInt, BigInt> ScaleProfile::a_window(int slot) const {
    const BigInt unit = power_of_base(base, a_exponent.eval_floor(slot), "a_window");
    return scaled_window(a_window_lo, a_window_hi, unit);
}

std::pair<BigInt, BigInt> ScaleProfile::r_window(int slot) const {
    const BigInt unit = power_of_base(base, r_exponent.eval_floor(slot), "r_window");
    return scaled_window(r_window_lo, r_window_hi, unit);
}

namespace {

nlohmann::json poly_json(const ExponentPoly& p) {
    return nlohmann::json::array({to_string(p.c0), to_string(p.c1), to_string(p.c2)});
}

ExponentPoly poly_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3)
        throw DomainError("profile: exponent polynomial needs [c0, c1, c2]");
    return ExponentPoly{parse_rational(j[0].get<std::string>()),
                        parse_rational(j[1].get<std::string>()),
                        parse_rational(j[2].get<std::string>())};
}

void check_window(const Rational& lo, const Rational& hi, long multiplier) {
    if (lo < 1 || hi > multiplier || lo > hi)
        throw DomainError("profile: window must sit inside [1, multiplier]");
}

} // namespace

std::string ScaleProfile::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["base"] = base;
    j["multiplier"] = multiplier;
    j["first_slot"] = first_slot;
    j["a_exponent"] = poly_json(a_exponent);
    j["r_exponent"] = poly_json(r_exponent);
    j["a_window"] = nlohmann::json::array({to_string(a_window_lo), to_string(a_window_hi)});
    j["r_window"] = nlohmann::json::array({to_string(r_window_lo), to_string(r_window_hi)});
    j["balance"] = to_string(balance);
    return j.dump(2);
}

ScaleProfile ScaleProfile::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError(std::string("profile: ") + e.what());
    }
    ScaleProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.base = j.at("base").get<long>();
        p.multiplier = j.at("multiplier").get<long>();
        p.first_slot = j.at("first_slot").get<int>();
        p.a_exponent = poly_from_json(j.at("a_exponent"));
        p.r_exponent = poly_from_json(j.at("r_exponent"));
        p.a_window_lo = parse_rational(j.at("a_window")[0].get<std::string>());
        p.a_window_hi = parse_rational(j.at("a_window")[1].get<std::string>());
        p.r_window_lo = parse_rational(j.at("r_window")[0].get<std::string>());
        p.r_window_hi = parse_rational(j.at("r_window")[1].get<std::string>());
        p.balance = parse_rational(j.at("balance").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("profile: ") + e.what());
    }
    if (p.base < 2 || p.multiplier < 2) throw DomainError("profile: base/multiplier too small");
    if (p.balance < 1) throw DomainError("profile: balance bound must be >= 1");
    check_window(p.a_window_lo, p.a_window_hi, p.multiplier);
    check_window(p.r_window_lo, p.r_window_hi, p.multiplier);
    return p;
}

ScaleProfile ScaleProfile::full() {
    ScaleProfile p;
    p.name = "full";
    p.base = 10;
    p.multiplier = 2;
    p.first_slot = 3;
    p.a_exponent = {Rational(0), Rational(-1), Rational(1)};     // i^2 - i
    p.r_exponent = {Rational(1), Rational(3), Rational(1)};      // i^2 + 3i + 1
    p.a_window_lo = Rational(8, 5);
    p.a_window_hi = Rational(2);
    p.r_window_lo = Rational(8, 5);
    p.r_window_hi = Rational(2);
    p.balance = Rational(2);
    return p;
}

ScaleProfile ScaleProfile::desk() {
    ScaleProfile p = full();
    p.name = "desk";
    p.a_exponent = {Rational(1), Rational(0), Rational(0)};      // flat small words
    p.a_window_lo = Rational(7, 5);
    p.a_window_hi = Rational(17, 10);
    p.r_window_lo = Rational(9, 5);
    p.r_window_hi = Rational(19, 10);
    return p;
}

ScaleProfile ScaleProfile::tiny() {
    ScaleProfile p;
    p.name = "tiny";
    p.base = 2;
    p.multiplier = 2;
    p.first_slot = 3;
    p.a_exponent = {Rational(-1), Rational(1), Rational(0)};     // i - 1
    p.r_exponent = {Rational(2), Rational(1), Rational(0)};      // i + 2
    p.a_window_lo = Rational(1);
    p.a_window_hi = Rational(2);
    p.r_window_lo = Rational(1);
    p.r_window_hi = Rational(2);
    p.balance = Rational(2);
    return p;
}

ScaleProfile ScaleProfile::fractal() {
    ScaleProfile p = full();
    p.name = "fractal";
    p.a_exponent = {Rational(0), Rational(-1, 2), Rational(1, 2)};    // (i^2 - i)/2
    p.r_exponent = {Rational(1, 2), Rational(3, 2), Rational(1, 2)};  // (i^2 + 3i + 1)/2
    return p;
}

ScaleProfile ScaleProfile::by_name(const std::string& name) {
    if (name == "full" || name == "paper") return full();
    if (name == "desk") return desk();
    if (name == "tiny") return tiny();
    if (name == "fractal" || name == "fractal_desk" || name == "fractal-desk")
        return fractal();
    if (name.rfind("custom:", 0) == 0) {
        const std::string path = name.substr(7);
        std::ifstream in(path);
        if (!in) throw DomainError("profile: cannot read " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_json(buf.str());
    }
    throw DomainError("profile: unknown name '" + name +
                      "' (use full, desk, tiny, fractal, or custom:<file>)");
}

void ChainSpec::validate() const {
    if (k < 1) throw DomainError("chain: depth k must be >= 1");
    if (blocks.size() != static_cast<std::size_t>(2 * k))
        throw DomainError("chain: expected 2k blocks");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const ChainBlock& b = blocks[i];
        if (b.slot != profile.first_slot + static_cast<int>(i))
            throw DomainError("chain: slots must be consecutive from the first slot");
        if (b.a.dim() != 2 || !b.a.is_nonnegative() || b.a.determinant() != 1)
            throw DomainError("chain: block shear word must be nonnegative with det 1");
        if (!is_balanced(b.a, profile.balance))
            throw DomainError("chain: block shear word is not balanced");
        const auto [alo, ahi] = profile.a_range(b.slot);
        const BigInt norm = matrix_norm(b.a);
        if (norm < alo || norm > ahi)
            throw DomainError("chain: shear norm outside its slot range");
        const auto [rlo, rhi] = profile.r_range(b.slot);
        if (b.r < rlo || b.r > rhi)
            throw DomainError("chain: repeat count outside its slot range");
    }
}

std::string ChainSpec::to_json() const {
    nlohmann::json j;
    j["profile"] = nlohmann::json::parse(profile.to_json());
    j["k"] = k;
    j["seed"] = seed;
    nlohmann::json blocks_json = nlohmann::json::array();
    for (const ChainBlock& b : blocks) {
        nlohmann::json bj;
        bj["slot"] = b.slot;
        bj["a"] = nlohmann::json::array(
            {nlohmann::json::array({b.a.at(0, 0).get_str(), b.a.at(0, 1).get_str()}),
             nlohmann::json::array({b.a.at(1, 0).get_str(), b.a.at(1, 1).get_str()})});
        bj["r"] = b.r.get_str();
        blocks_json.push_back(bj);
    }
    j["blocks"] = blocks_json;
    return j.dump(2);
}

ChainSpec ChainSpec::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError(std::string("chain: ") + e.what());
    }
    ChainSpec spec;
    try {
        spec.profile = ScaleProfile::from_json(j.at("profile").dump());
        spec.k = j.at("k").get<int>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& bj : j.at("blocks")) {
            ChainBlock b;
            b.slot = bj.at("slot").get<int>();
            Matrix a(2);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    a.at(r, c) = BigInt(bj.at("a")[r][c].get<std::string>());
            b.a = std::move(a);
            b.r = BigInt(bj.at("r").get<std::string>());
            spec.blocks.push_back(std::move(b));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("chain: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DomainError(std::string("chain: bad integer literal: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::uint64_t ChainSpec::content_hash() const {
    return fnv1a64(to_json());
}

namespace {

Matrix sample_shear_word(const std::pair<BigInt, BigInt>& window, const Rational& balance,
                         SeededRng& rng) {
    const auto& [lo, hi] = window;
    const Matrix tail = shear_upper() * shear_lower();
    for (long attempt = 0; attempt < 100000; ++attempt) {
        Matrix w = Matrix::identity(2);
        for (;;) {
            const Matrix candidate = w * tail;
            const BigInt norm = matrix_norm(candidate);
            if (norm > hi) break; // overshot the window; restart the walk
            if (norm >= lo) {
                if (!is_balanced(candidate, balance)) break;
                return candidate;
            }
            w = w * (rng.uniform_u64(0, 1) ? shear_lower() : shear_upper());
        }
    }
    throw ResourceError("sample_chain: norm-window walk kept overshooting");
}

} // namespace

ChainBlock sample_block(const ScaleProfile& profile, int slot, SeededRng& rng) {
    ChainBlock b;
    b.slot = slot;
    b.a = sample_shear_word(profile.a_window(slot), profile.balance, rng);
    const auto [rlo, rhi] = profile.r_window(slot);
    b.r = rng.uniform_bigint(rlo, rhi);
    return b;
}

ChainSpec sample_chain(const ScaleProfile& profile, int k, SeededRng& rng) {
    if (k < 1) throw DomainError("sample_chain: depth k must be >= 1");
    ChainSpec spec;
    spec.profile = profile;
    spec.k = k;
    for (int i = 0; i < 2 * k; ++i)
        spec.blocks.push_back(sample_block(profile, profile.first_slot + i, rng));
    spec.validate();
    return spec;
}

Matrix chain_matrix(const ChainSpec& spec) {
    Matrix m = Matrix::identity(4);
    for (const ChainBlock& b : spec.blocks)
        m = m * block_matrix(b.a, b.r, b.side(spec.profile));
    return m;
}

std::vector<Matrix> chain_prefixes(const ChainSpec& spec) {
    std::vector<Matrix> out;
    Matrix m = Matrix::identity(4);
    for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
        const ChainBlock& b = spec.blocks[i];
        m = m * block_matrix(b.a, b.r, b.side(spec.profile));
        if (i % 2 == 1) out.push_back(m);
    }
    return out;
}

std::vector<Matrix> chain_partials(const ChainSpec& spec) {
    std::vector<Matrix> out;
    Matrix m = Matrix::identity(4);
    for (const ChainBlock& b : spec.blocks) {
        m = m * block_matrix(b.a, b.r, b.side(spec.profile));
        out.push_back(m);
    }
    return out;
}

Matrix chain_matrix_cached(const ChainSpec& spec, const std::string& cache_dir) {
    if (cache_dir.empty()) return chain_matrix(spec);
    namespace fs = std::filesystem;
    const std::string key = hash_hex(spec.content_hash());
    const fs::path path = fs::path(cache_dir) / ("chain-" + key + ".json");

    if (fs::exists(path)) {
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            const nlohmann::json j = nlohmann::json::parse(buf.str());
            if (j.at("key").get<std::string>() == key) {
                Matrix m(4);
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 4; ++c)
                        m.at(r, c) = BigInt(j.at("entries")[r][c].get<std::string>());
                return m;
            }
        } catch (const std::exception&) {
            // fall through and recompute over the corrupted entry
        }
    }

    const Matrix m = chain_matrix(spec);
    std::error_code ec;
    fs::create_directories(fs::path(cache_dir), ec);
    nlohmann::json j;
    j["key"] = key;
    nlohmann::json entries = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(m.at(r, c).get_str());
        entries.push_back(row);
    }
    j["entries"] = entries;
    std::ofstream out(path);
    if (out) out << j.dump(2);
    return m;
}

std::string default_cache_dir() {
    const char* env = std::getenv("IETNUE_CACHE");
    return env ? std::string(env) : std::string();
}

} // namespace ietnue
