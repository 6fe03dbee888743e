#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "shotit/bigint.hpp"

namespace shotit {

// Exact decimal fixed-point number: value = sign * unscaled * 10^-scale.
// Addition, subtraction and multiplication are exact; division and square
// root are computed to a caller-chosen number of fractional digits.
class ExactDecimal {
public:
    ExactDecimal() = default;
    static ExactDecimal from_parts(bool negative, BigUint unscaled, uint32_t scale);
    static ExactDecimal from_int(int64_t v);
    static ExactDecimal parse(std::string_view s); // "-12.0345" style

    bool is_zero() const { return unscaled_.is_zero(); }
    bool negative() const { return negative_ && !is_zero(); }
    uint32_t scale() const { return scale_; }
    const BigUint& unscaled() const { return unscaled_; }

    ExactDecimal operator+(const ExactDecimal& o) const;
    ExactDecimal operator-(const ExactDecimal& o) const;
    ExactDecimal operator*(const ExactDecimal& o) const;
    bool operator==(const ExactDecimal& o) const;

    // Full fixed-point rendering, e.g. "1.414213562373095048".
    std::string to_string() const;
    // Same with trailing fractional zeros removed ("0.5", "2").
    std::string to_string_trimmed() const;
    // Nearest binary double of the decimal value.
    double to_double() const;

private:
    ExactDecimal rescaled(uint32_t scale) const; // scale >= scale_
    bool negative_ = false;
    BigUint unscaled_;
    uint32_t scale_ = 0;
};

// Floor of sqrt(n) at frac_digits fractional digits: the result r is the
// largest multiple of 10^-frac_digits with r^2 <= n. Negative n is a
// domain error.
ExactDecimal exact_sqrt(int64_t n, uint32_t frac_digits);
ExactDecimal exact_sqrt(const BigUint& n, uint32_t frac_digits);

// a / b rounded half-even to frac_digits fractional digits. Zero divisor
// is a domain error.
ExactDecimal exact_div(int64_t a, const ExactDecimal& b, uint32_t frac_digits);

} // namespace shotit
