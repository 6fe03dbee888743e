#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace shotit {

// Arbitrary-precision unsigned integer, base 2^32 little-endian limbs.
// Sized for descriptor normalization work (a few hundred bits), not for
// number theory: multiplication is schoolbook and division is binary
// shift-subtract.
class BigUint {
public:
    BigUint() = default;
    BigUint(uint64_t v);

    static BigUint from_decimal(std::string_view s); // throws ParseError
    static BigUint pow10(uint32_t exp);
    static BigUint one_shl(size_t bits); // 2^bits

    bool is_zero() const { return limbs_.empty(); }
    size_t bit_length() const;
    bool bit(size_t i) const;

    // -1 / 0 / +1 comparison.
    static int cmp(const BigUint& a, const BigUint& b);
    bool operator==(const BigUint& o) const { return cmp(*this, o) == 0; }
    bool operator<(const BigUint& o) const { return cmp(*this, o) < 0; }
    bool operator<=(const BigUint& o) const { return cmp(*this, o) <= 0; }
    bool operator>(const BigUint& o) const { return cmp(*this, o) > 0; }
    bool operator>=(const BigUint& o) const { return cmp(*this, o) >= 0; }

    BigUint& operator+=(const BigUint& o);
    BigUint& operator-=(const BigUint& o); // requires *this >= o
    BigUint operator+(const BigUint& o) const;
    BigUint operator-(const BigUint& o) const;
    BigUint operator*(const BigUint& o) const;
    BigUint& operator<<=(size_t bits);

    // Binary long division, (quotient, remainder); throws DomainError on
    // zero divisor.
    static std::pair<BigUint, BigUint> divmod(const BigUint& num, const BigUint& den);

    // In-place helpers used by decimal conversion.
    void mul_add_small(uint32_t mul, uint32_t add);
    uint32_t divmod_small(uint32_t den); // returns remainder

    // Floor square root via integer Newton iteration.
    static BigUint isqrt(const BigUint& n);

    std::string to_decimal() const;
    uint64_t to_u64() const; // throws DomainError if it does not fit

private:
    void trim();
    void set_bit(size_t i);
    std::vector<uint32_t> limbs_;
};

} // namespace shotit
