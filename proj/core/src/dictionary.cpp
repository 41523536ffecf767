#include "kooplift/dictionary.hpp"

#include <cstdio>
#include <stdexcept>

namespace kooplift {

namespace {

std::size_t count_nonzero(const std::vector<std::uint8_t>& exps) {
    std::size_t n = 0;
    for (auto e : exps)
        if (e) ++n;
    return n;
}

void enumerate_grade(std::size_t dim, std::size_t remaining, std::size_t pos,
                     std::vector<std::uint8_t>& current, bool diagonal_only,
                     std::vector<std::vector<std::uint8_t>>& out) {
    if (pos + 1 == dim) {
        current[pos] = static_cast<std::uint8_t>(remaining);
        if (!diagonal_only || count_nonzero(current) <= 1) out.push_back(current);
        current[pos] = 0;
        return;
    }
    for (std::size_t e = remaining + 1; e-- > 0;) {
        current[pos] = static_cast<std::uint8_t>(e);
        enumerate_grade(dim, remaining - e, pos + 1, current, diagonal_only, out);
    }
    current[pos] = 0;
}

// (variable, exponent) pairs per term, skipping zero exponents; makes the
// row-wise lift linear in the number of active factors.
struct CompactTerms {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> factors;
    std::vector<std::size_t> offsets;  // size M + 1

    explicit CompactTerms(const Dictionary& dict) {
        offsets.reserve(dict.terms.size() + 1);
        offsets.push_back(0);
        for (const auto& exps : dict.terms) {
            for (std::size_t i = 0; i < exps.size(); ++i)
                if (exps[i]) factors.emplace_back(static_cast<std::uint32_t>(i), exps[i]);
            offsets.push_back(factors.size());
        }
    }
};

}  // namespace

std::size_t dictionary_size(std::size_t dim, std::size_t degree, std::size_t cap) {
    if (dim < 1) throw std::invalid_argument("dictionary_size: dim must be >= 1");
    // C(dim + degree, degree) built iteratively; the sequence C(dim + i, i)
    // is increasing in i, so the cap check can fire early.
    unsigned long long result = 1;
    for (std::size_t i = 1; i <= degree; ++i) {
        const unsigned long long factor = dim + i;
        if (result > (~0ull) / factor) throw std::overflow_error("dictionary_size: 64-bit overflow");
        result = result * factor / i;  // exact: result holds C(dim+i-1, i-1) before the step
        if (result > cap) {
            char msg[96];
            std::snprintf(msg, sizeof(msg),
                          "dictionary_size: term count exceeds cap (%llu > %zu)", result, cap);
            throw std::overflow_error(msg);
        }
    }
    return static_cast<std::size_t>(result);
}

Dictionary build_dictionary(std::size_t dim, std::size_t degree, bool diagonal_only,
                            std::size_t cap) {
    if (dim < 1) throw std::invalid_argument("build_dictionary: dim must be >= 1");
    dictionary_size(dim, degree, cap);  // overflow / cap check up front
    Dictionary dict;
    dict.input_dim = dim;
    dict.max_degree = degree;
    dict.diagonal_only = diagonal_only;
    std::vector<std::uint8_t> current(dim, 0);
    for (std::size_t grade = 0; grade <= degree; ++grade)
        enumerate_grade(dim, grade, 0, current, diagonal_only, dict.terms);
    return dict;
}

std::vector<double> lift(const Dictionary& dict, std::span<const double> z) {
    if (z.size() != dict.input_dim) throw std::invalid_argument("lift: vector length mismatch");
    std::vector<double> psi(dict.size());
    for (std::size_t m = 0; m < dict.terms.size(); ++m) {
        const auto& exps = dict.terms[m];
        double v = 1.0;
        for (std::size_t i = 0; i < exps.size(); ++i)
            for (unsigned r = 0; r < exps[i]; ++r) v *= z[i];
        psi[m] = v;
    }
    return psi;
}

DenseMatrix lift(const Dictionary& dict, const DenseMatrix& z) {
    if (z.cols != dict.input_dim) throw std::invalid_argument("lift: column count mismatch");
    const CompactTerms compact(dict);
    const std::size_t m_terms = dict.size();
    DenseMatrix psi(z.rows, m_terms);
    for (std::size_t n = 0; n < z.rows; ++n) {
        const double* zn = z.data.data() + n * z.cols;
        double* pn = psi.data.data() + n * m_terms;
        for (std::size_t m = 0; m < m_terms; ++m) {
            double v = 1.0;
            for (std::size_t f = compact.offsets[m]; f < compact.offsets[m + 1]; ++f) {
                const auto [var, exp] = compact.factors[f];
                for (std::uint32_t r = 0; r < exp; ++r) v *= zn[var];
            }
            pn[m] = v;
        }
    }
    return psi;
}

}  // namespace kooplift
