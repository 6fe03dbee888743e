#include "shotit/vectorize.hpp"

#include <vector>

#include "shotit/bigint.hpp"
#include "shotit/descriptor.hpp"
#include "shotit/exact_decimal.hpp"

namespace shotit {

FeatureVector normalize_codes(std::span<const uint32_t> codes) {
    FeatureVector out;
    BigUint sum_sq;
    for (uint32_t c : codes) {
        uint64_t sq = static_cast<uint64_t>(c) * c;
        sum_sq += BigUint(sq);
    }
    if (sum_sq.is_zero()) return out; // all-zero hash sentinel

    ExactDecimal norm = exact_sqrt(sum_sq, kNormFracDigits);
    size_t n = std::min(codes.size(), kVectorDim);
    for (size_t i = 0; i < n; ++i) {
        if (codes[i] == 0) continue;
        out.values[i] =
            exact_div(static_cast<int64_t>(codes[i]), norm, kNormFracDigits).to_double();
    }
    return out;
}

FeatureVector normalize_hash(std::string_view hash_str) {
    ColorLayoutHash h = decode_hash(hash_str);
    std::vector<uint32_t> codes(h.coeffs.begin(), h.coeffs.end());
    return normalize_codes(codes);
}

} // namespace shotit
