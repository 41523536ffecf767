#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kooplift/matrix.hpp"

namespace kooplift {

inline constexpr std::size_t kDefaultTermCap = 1'000'000;

/// Monomial dictionary over D variables up to a maximum total degree.
/// Terms are ordered by grade (total degree), the constant term first;
/// within a grade the exponent vectors appear with earlier variables taking
/// the largest exponents first, i.e. 1, z1, ..., zD, z1^2, z1 z2, ...
struct Dictionary {
    std::size_t input_dim = 0;
    std::size_t max_degree = 0;
    bool diagonal_only = false;                    // drop cross terms like z1 z2
    std::vector<std::vector<std::uint8_t>> terms;  // exponent vectors, length input_dim

    std::size_t size() const { return terms.size(); }
};

/// C(D + d, d) without enumerating. Throws on overflow past `cap`.
std::size_t dictionary_size(std::size_t dim, std::size_t degree, std::size_t cap = kDefaultTermCap);

Dictionary build_dictionary(std::size_t dim, std::size_t degree, bool diagonal_only = false,
                            std::size_t cap = kDefaultTermCap);

/// Evaluate all dictionary functions on one vector; psi[0] is always 1.
std::vector<double> lift(const Dictionary& dict, std::span<const double> z);

/// Row-wise lift of an N x D matrix into N x M.
DenseMatrix lift(const Dictionary& dict, const DenseMatrix& z);

}  // namespace kooplift
