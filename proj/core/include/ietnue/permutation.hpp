// Finite permutations on {0, ..., d-1} with both directions cached.
//
// Text form uses the classical 1-based digit string: "4321" is the permutation
// sending position 1 to 4, 2 to 3, 3 to 2, 4 to 1. Internally everything is
// 0-based.
#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "ietnue/errors.hpp"

namespace ietnue {

class Permutation {
public:
    /// images[j] = image of position j, 0-based. Validates bijectivity.
    explicit Permutation(std::vector<int> images) : images_(std::move(images)) {
        const int d = static_cast<int>(images_.size());
        if (d == 0) throw DomainError("Permutation: empty");
        preimages_.assign(d, -1);
        for (int j = 0; j < d; ++j) {
            const int v = images_[j];
            if (v < 0 || v >= d) throw DomainError("Permutation: image out of range");
            if (preimages_[v] != -1) throw DomainError("Permutation: repeated image");
            preimages_[v] = j;
        }
    }

    /// Parse "4321" (one digit per symbol) or "4,3,2,1" (1-based values).
    static Permutation parse(std::string_view text) {
        std::vector<int> images;
        if (text.find(',') == std::string_view::npos) {
            for (const char c : text) {
                if (c < '1' || c > '9') throw DomainError("Permutation: bad digit string");
                images.push_back(c - '1');
            }
        } else {
            std::size_t pos = 0;
            while (pos <= text.size()) {
                const std::size_t comma = std::min(text.find(',', pos), text.size());
                int value = 0;
                if (comma == pos) throw DomainError("Permutation: empty field");
                for (std::size_t i = pos; i < comma; ++i) {
                    const char c = text[i];
                    if (c < '0' || c > '9') throw DomainError("Permutation: bad number");
                    value = value * 10 + (c - '0');
                }
                images.push_back(value - 1);
                if (comma == text.size()) break;
                pos = comma + 1;
            }
        }
        return Permutation(std::move(images));
    }

    int size() const { return static_cast<int>(images_.size()); }
    int image(int j) const { return images_[j]; }
    int preimage(int v) const { return preimages_[v]; }

    Permutation inverse() const { return Permutation(preimages_); }

    /// Irreducible: no proper prefix {0..j} maps onto itself. Reducible data
    /// splits into two independent blocks and the induction never mixes them.
    bool is_irreducible() const {
        const int d = size();
        int max_image = -1;
        for (int j = 0; j + 1 < d; ++j) {
            max_image = std::max(max_image, images_[j]);
            if (max_image == j) return false;
        }
        return true;
    }

    /// Digit string when d <= 9 ("4321"), comma-separated 1-based otherwise.
    std::string to_string() const {
        std::string out;
        const int d = size();
        for (int j = 0; j < d; ++j) {
            if (d <= 9) {
                out.push_back(static_cast<char>('1' + images_[j]));
            } else {
                if (j) out.push_back(',');
                out += std::to_string(images_[j] + 1);
            }
        }
        return out;
    }

    friend bool operator==(const Permutation& a, const Permutation& b) {
        return a.images_ == b.images_;
    }
    friend std::strong_ordering operator<=>(const Permutation& a, const Permutation& b) {
        return a.images_ <=> b.images_;
    }

private:
    std::vector<int> images_;
    std::vector<int> preimages_;
};

} // namespace ietnue
