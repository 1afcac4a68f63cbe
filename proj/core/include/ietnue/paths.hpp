// Long induction paths assembled from four closed-form ladder families.
//
// Inside the order-4 reversal class there are two move cycles through the
// root ("4321") and a loop vertex on each; powers of those loops give four
// families of 4x4 matrices with closed forms:
//   ladder L1(n): identity with last row (n, n, n, 1)        [3n moves B]
//   ladder U1(n): rows (1,0,0,0),(0,1,0,0),(0,0,n+1,n),(1,1,1,1)
//                                                            [B B, n x A, B]
//   ladder L2(n): identity with first row (1, n, n, n)       [3n moves A]
//   ladder U2(n): rows (1,1,1,1),(n,n+1,0,0),(0,0,1,0),(0,0,0,1)
//                                                            [A A, n x B, A]
// A shear word A and a repeat count r assemble into one *block*: a 4x4 matrix
// that is block-triangular with an identity 2x2 corner and A*U^r*L (up to the
// swap conjugation) in the other corner. Alternating lower-route and
// upper-route blocks produce the nested chains whose geometry the rest of the
// library certifies.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ietnue/matrix.hpp"
#include "ietnue/rauzy.hpp"
#include "ietnue/rng.hpp"
#include "ietnue/sl2.hpp"

namespace ietnue {

enum class LadderKind { Lower1, Upper1, Lower2, Upper2 };

/// Closed-form ladder matrix (exact for arbitrarily large n).
Matrix ladder_matrix(LadderKind kind, const BigInt& n);

/// Elementary move word realizing the ladder; materialized only for small n.
std::vector<RauzyMove> ladder_word(LadderKind kind, long n);

/// Which corner of the block carries the shear data.
enum class BlockSide { Lower, Upper };

/// Block matrix from a balanced shear word A and repeat count r >= 1.
/// BlockSide::Lower places A*U^r*L in the {2,3}x{2,3} corner (0-based) and
/// shifts columns 2,3 by a common vector; BlockSide::Upper is the mirrored,
/// block-upper-triangular form. Throws DomainError when A's shear word ends
/// with the upper shear (no ladder word realizes it) or r < 1.
Matrix block_matrix(const Matrix& a, const BigInt& r, BlockSide side);

/// Elementary move word of the same block (replayable against the dynamics).
std::vector<RauzyMove> block_word(const Matrix& a, long r, BlockSide side);

/// Ladder decomposition of the same block: (kind, n) pairs whose ladder
/// matrices multiply, left to right, to block_matrix(a, r, side). This is
/// the factor granularity for certified fast replay of huge blocks.
std::vector<std::pair<LadderKind, BigInt>> block_ladder_factors(const Matrix& a,
                                                                const BigInt& r,
                                                                BlockSide side);

/// Degree-2 polynomial with rational coefficients, evaluated with floor.
struct ExponentPoly {
    Rational c0, c1, c2;
    long eval_floor(long i) const;
};

/// A named scale: ranges are [base^e, multiplier*base^e] with e given by the
/// exponent polynomials evaluated at the block's slot index. Samplers draw
/// from the narrower window [*_window_lo, *_window_hi] * base^e.
struct ScaleProfile {
    std::string name;
    long base = 10;
    long multiplier = 2;
    int first_slot = 3;
    ExponentPoly a_exponent;
    ExponentPoly r_exponent;
    Rational a_window_lo, a_window_hi;
    Rational r_window_lo, r_window_hi;
    Rational balance; // column-sum ratio bound D

    /// Full admissible range for the shear-word norm / repeat count at a slot.
    std::pair<BigInt, BigInt> a_range(int slot) const;
    std::pair<BigInt, BigInt> r_range(int slot) const;
    /// Narrow sampling windows inside the ranges.
    std::pair<BigInt, BigInt> a_window(int slot) const;
    std::pair<BigInt, BigInt> r_window(int slot) const;

    std::string to_json() const;
    static ScaleProfile from_json(const std::string& text);

    /// Presets: the construction-scale profile and three desk-scale ones.
    static ScaleProfile full();    // e_a(i) = i^2 - i, e_r(i) = i^2 + 3i + 1
    static ScaleProfile desk();    // e_a = 1, e_r as in full (decay-fit scale)
    static ScaleProfile tiny();    // base 2, linear exponents (replayable)
    static ScaleProfile fractal(); // halved full exponents (count-fit scale)
    static ScaleProfile by_name(const std::string& name); // also reads custom:<file>
};

/// One sampled block: slot index, shear word (as a matrix), repeat count.
struct ChainBlock {
    int slot = 0;
    Matrix a = Matrix::identity(2);
    BigInt r = 1;
    BlockSide side(const ScaleProfile& p) const {
        return (slot - p.first_slot) % 2 == 0 ? BlockSide::Lower : BlockSide::Upper;
    }
};

/// A depth-k chain: 2k blocks at slots first_slot .. first_slot + 2k - 1,
/// alternating lower/upper, each within its profile ranges.
struct ChainSpec {
    ScaleProfile profile;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<ChainBlock> blocks;

    void validate() const; // throws DomainError / CheckError on violations

    std::string to_json() const;
    static ChainSpec from_json(const std::string& text);
    std::uint64_t content_hash() const;
};

/// Sample one block at `slot` from the profile windows. Throws ResourceError
/// if the norm-window walk keeps overshooting (attempt budget).
ChainBlock sample_block(const ScaleProfile& profile, int slot, SeededRng& rng);

/// Sample a depth-k chain from the profile windows (one block per slot).
ChainSpec sample_chain(const ScaleProfile& profile, int k, SeededRng& rng);

/// Product of all blocks (left-to-right as listed).
Matrix chain_matrix(const ChainSpec& spec);

/// Prefix products after each lower/upper *pair*: element j-1 is the depth-j
/// matrix, so the last element equals chain_matrix(spec).
std::vector<Matrix> chain_prefixes(const ChainSpec& spec);

/// Prefix products after every single block (2k entries; even indices are the
/// half-depth points right after a lower-route block).
std::vector<Matrix> chain_partials(const ChainSpec& spec);

/// Same as chain_matrix but backed by a content-addressed cache directory
/// (empty dir string disables caching). Cache entries are keyed by the spec
/// hash and store the full matrix; corrupted entries are recomputed.
Matrix chain_matrix_cached(const ChainSpec& spec, const std::string& cache_dir);

/// Cache directory from the environment (IETNUE_CACHE), or empty.
std::string default_cache_dir();

} // namespace ietnue
