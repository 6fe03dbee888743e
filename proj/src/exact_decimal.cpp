#include "shotit/exact_decimal.hpp"

#include <cstdlib>

#include "shotit/errors.hpp"

namespace shotit {

ExactDecimal ExactDecimal::from_parts(bool negative, BigUint unscaled, uint32_t scale) {
    ExactDecimal d;
    d.negative_ = negative && !unscaled.is_zero();
    d.unscaled_ = std::move(unscaled);
    d.scale_ = scale;
    return d;
}

ExactDecimal ExactDecimal::from_int(int64_t v) {
    bool neg = v < 0;
    uint64_t mag = neg ? 0ull - static_cast<uint64_t>(v) : static_cast<uint64_t>(v);
    return from_parts(neg, BigUint(mag), 0);
}

ExactDecimal ExactDecimal::parse(std::string_view s) {
    if (s.empty()) throw ParseError("empty decimal");
    bool neg = false;
    if (s.front() == '-' || s.front() == '+') {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    auto dot = s.find('.');
    std::string digits;
    uint32_t scale = 0;
    if (dot == std::string_view::npos) {
        digits = std::string(s);
    } else {
        digits = std::string(s.substr(0, dot)) + std::string(s.substr(dot + 1));
        scale = static_cast<uint32_t>(s.size() - dot - 1);
    }
    if (digits.empty()) throw ParseError("no digits in decimal");
    return from_parts(neg, BigUint::from_decimal(digits), scale);
}

ExactDecimal ExactDecimal::rescaled(uint32_t scale) const {
    if (scale == scale_) return *this;
    if (scale < scale_) throw DomainError("rescale would drop digits");
    return from_parts(negative_, unscaled_ * BigUint::pow10(scale - scale_), scale);
}

ExactDecimal ExactDecimal::operator+(const ExactDecimal& o) const {
    uint32_t s = std::max(scale_, o.scale_);
    ExactDecimal a = rescaled(s);
    ExactDecimal b = o.rescaled(s);
    if (a.negative_ == b.negative_)
        return from_parts(a.negative_, a.unscaled_ + b.unscaled_, s);
    // Opposite signs: subtract the smaller magnitude from the larger.
    int c = BigUint::cmp(a.unscaled_, b.unscaled_);
    if (c == 0) return from_parts(false, BigUint(), s);
    if (c > 0) return from_parts(a.negative_, a.unscaled_ - b.unscaled_, s);
    return from_parts(b.negative_, b.unscaled_ - a.unscaled_, s);
}

ExactDecimal ExactDecimal::operator-(const ExactDecimal& o) const {
    ExactDecimal neg = from_parts(!o.negative_, o.unscaled_, o.scale_);
    return *this + neg;
}

ExactDecimal ExactDecimal::operator*(const ExactDecimal& o) const {
    return from_parts(negative_ != o.negative_, unscaled_ * o.unscaled_, scale_ + o.scale_);
}

bool ExactDecimal::operator==(const ExactDecimal& o) const {
    uint32_t s = std::max(scale_, o.scale_);
    ExactDecimal a = rescaled(s);
    ExactDecimal b = o.rescaled(s);
    return a.negative() == b.negative() && a.unscaled_ == b.unscaled_;
}

std::string ExactDecimal::to_string() const {
    std::string digits = unscaled_.to_decimal();
    if (digits.size() <= scale_)
        digits = std::string(scale_ - digits.size() + 1, '0') + digits;
    std::string out;
    if (negative()) out.push_back('-');
    out += digits.substr(0, digits.size() - scale_);
    if (scale_ > 0) {
        out.push_back('.');
        out += digits.substr(digits.size() - scale_);
    }
    return out;
}

std::string ExactDecimal::to_string_trimmed() const {
    std::string s = to_string();
    if (s.find('.') == std::string::npos) return s;
    size_t last = s.find_last_not_of('0');
    if (s[last] == '.') --last;
    return s.substr(0, last + 1);
}

double ExactDecimal::to_double() const {
    // strtod performs correctly rounded decimal-to-binary conversion.
    return std::strtod(to_string().c_str(), nullptr);
}

ExactDecimal exact_sqrt(const BigUint& n, uint32_t frac_digits) {
    BigUint scaled = n * BigUint::pow10(2 * frac_digits);
    return ExactDecimal::from_parts(false, BigUint::isqrt(scaled), frac_digits);
}

ExactDecimal exact_sqrt(int64_t n, uint32_t frac_digits) {
    if (n < 0) throw DomainError("exact_sqrt of negative value");
    return exact_sqrt(BigUint(static_cast<uint64_t>(n)), frac_digits);
}

ExactDecimal exact_div(int64_t a, const ExactDecimal& b, uint32_t frac_digits) {
    if (b.is_zero()) throw DomainError("exact_div by zero");
    bool neg = (a < 0) != b.negative();
    uint64_t mag = a < 0 ? 0ull - static_cast<uint64_t>(a) : static_cast<uint64_t>(a);
    // a / (unscaled * 10^-scale) = a * 10^(scale + frac) / unscaled, then
    // interpret the quotient at frac digits.
    BigUint num = BigUint(mag) * BigUint::pow10(b.scale() + frac_digits);
    auto [quot, rem] = BigUint::divmod(num, b.unscaled());
    BigUint twice_rem = rem * BigUint(2);
    int c = BigUint::cmp(twice_rem, b.unscaled());
    if (c > 0 || (c == 0 && quot.bit(0)))
        quot += BigUint(1);
    return ExactDecimal::from_parts(neg, std::move(quot), frac_digits);
}

} // namespace shotit
