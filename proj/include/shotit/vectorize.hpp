#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace shotit {

inline constexpr size_t kVectorDim = 100;

// Unit-L2 feature vector derived from a descriptor hash. Values are the
// binary doubles of 18-digit exact decimal quotients, so they sit in [0,1];
// the all-zero vector is the sentinel for an all-zero hash.
struct FeatureVector {
    std::array<double, kVectorDim> values{};

    double dot(const FeatureVector& o) const {
        double s = 0.0;
        for (size_t i = 0; i < kVectorDim; ++i) s += values[i] * o.values[i];
        return s;
    }
    double norm2() const { return dot(*this); }
    bool operator==(const FeatureVector& o) const = default;
};

// Exact-arithmetic normalization of raw coefficient codes:
//   norm = floor-sqrt(sum of squares) at 18 fractional digits,
//   v[i] = half-even(code[i] / norm) at 18 fractional digits.
// Codes are not range-checked here; callers feed either decoded hashes or
// synthetic values.
FeatureVector normalize_codes(std::span<const uint32_t> codes);

// Parse a 100-word base-16 hash string and normalize it.
FeatureVector normalize_hash(std::string_view hash_str);

inline constexpr uint32_t kNormFracDigits = 18;

} // namespace shotit
