#include "shotit/bigint.hpp"

#include <algorithm>

#include "shotit/errors.hpp"

namespace shotit {

BigUint::BigUint(uint64_t v) {
    if (v != 0) {
        limbs_.push_back(static_cast<uint32_t>(v & 0xffffffffu));
        if (v >> 32) limbs_.push_back(static_cast<uint32_t>(v >> 32));
    }
}

void BigUint::trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

BigUint BigUint::from_decimal(std::string_view s) {
    if (s.empty()) throw ParseError("empty decimal integer");
    BigUint r;
    for (char c : s) {
        if (c < '0' || c > '9')
            throw ParseError(std::string("bad decimal digit '") + c + "'");
        r.mul_add_small(10, static_cast<uint32_t>(c - '0'));
    }
    return r;
}

BigUint BigUint::pow10(uint32_t exp) {
    BigUint r(1);
    for (uint32_t i = 0; i < exp; ++i) r.mul_add_small(10, 0);
    return r;
}

BigUint BigUint::one_shl(size_t bits) {
    BigUint r;
    r.limbs_.assign(bits / 32 + 1, 0);
    r.limbs_[bits / 32] = 1u << (bits % 32);
    return r;
}

size_t BigUint::bit_length() const {
    if (limbs_.empty()) return 0;
    uint32_t top = limbs_.back();
    size_t bits = (limbs_.size() - 1) * 32;
    while (top) {
        ++bits;
        top >>= 1;
    }
    return bits;
}

bool BigUint::bit(size_t i) const {
    size_t limb = i / 32;
    if (limb >= limbs_.size()) return false;
    return (limbs_[limb] >> (i % 32)) & 1u;
}

void BigUint::set_bit(size_t i) {
    size_t limb = i / 32;
    if (limb >= limbs_.size()) limbs_.resize(limb + 1, 0);
    limbs_[limb] |= 1u << (i % 32);
}

int BigUint::cmp(const BigUint& a, const BigUint& b) {
    if (a.limbs_.size() != b.limbs_.size())
        return a.limbs_.size() < b.limbs_.size() ? -1 : 1;
    for (size_t i = a.limbs_.size(); i-- > 0;) {
        if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] < b.limbs_[i] ? -1 : 1;
    }
    return 0;
}

BigUint& BigUint::operator+=(const BigUint& o) {
    if (limbs_.size() < o.limbs_.size()) limbs_.resize(o.limbs_.size(), 0);
    uint64_t carry = 0;
    for (size_t i = 0; i < limbs_.size(); ++i) {
        uint64_t sum = carry + limbs_[i] + (i < o.limbs_.size() ? o.limbs_[i] : 0u);
        limbs_[i] = static_cast<uint32_t>(sum);
        carry = sum >> 32;
    }
    if (carry) limbs_.push_back(static_cast<uint32_t>(carry));
    return *this;
}

BigUint& BigUint::operator-=(const BigUint& o) {
    if (cmp(*this, o) < 0) throw DomainError("BigUint subtraction underflow");
    int64_t borrow = 0;
    for (size_t i = 0; i < limbs_.size(); ++i) {
        int64_t diff = static_cast<int64_t>(limbs_[i]) - borrow -
                       (i < o.limbs_.size() ? o.limbs_[i] : 0u);
        borrow = 0;
        if (diff < 0) {
            diff += 1ll << 32;
            borrow = 1;
        }
        limbs_[i] = static_cast<uint32_t>(diff);
    }
    trim();
    return *this;
}

BigUint BigUint::operator+(const BigUint& o) const {
    BigUint r = *this;
    r += o;
    return r;
}

BigUint BigUint::operator-(const BigUint& o) const {
    BigUint r = *this;
    r -= o;
    return r;
}

BigUint BigUint::operator*(const BigUint& o) const {
    if (is_zero() || o.is_zero()) return BigUint();
    BigUint r;
    r.limbs_.assign(limbs_.size() + o.limbs_.size(), 0);
    for (size_t i = 0; i < limbs_.size(); ++i) {
        uint64_t carry = 0;
        for (size_t j = 0; j < o.limbs_.size(); ++j) {
            uint64_t cur = r.limbs_[i + j] +
                           static_cast<uint64_t>(limbs_[i]) * o.limbs_[j] + carry;
            r.limbs_[i + j] = static_cast<uint32_t>(cur);
            carry = cur >> 32;
        }
        size_t k = i + o.limbs_.size();
        while (carry) {
            uint64_t cur = r.limbs_[k] + carry;
            r.limbs_[k] = static_cast<uint32_t>(cur);
            carry = cur >> 32;
            ++k;
        }
    }
    r.trim();
    return r;
}

BigUint& BigUint::operator<<=(size_t bits) {
    if (is_zero() || bits == 0) return *this;
    size_t limb_shift = bits / 32;
    size_t bit_shift = bits % 32;
    limbs_.insert(limbs_.begin(), limb_shift, 0);
    if (bit_shift) {
        uint32_t carry = 0;
        for (size_t i = limb_shift; i < limbs_.size(); ++i) {
            uint32_t nxt = limbs_[i] >> (32 - bit_shift);
            limbs_[i] = (limbs_[i] << bit_shift) | carry;
            carry = nxt;
        }
        if (carry) limbs_.push_back(carry);
    }
    return *this;
}

std::pair<BigUint, BigUint> BigUint::divmod(const BigUint& num, const BigUint& den) {
    if (den.is_zero()) throw DomainError("division by zero");
    BigUint quot, rem;
    if (cmp(num, den) < 0) return {quot, num};
    rem.limbs_.reserve(den.limbs_.size() + 1);
    for (size_t i = num.bit_length(); i-- > 0;) {
        rem <<= 1;
        if (num.bit(i)) rem.set_bit(0);
        if (cmp(rem, den) >= 0) {
            rem -= den;
            quot.set_bit(i);
        }
    }
    quot.trim();
    return {quot, rem};
}

void BigUint::mul_add_small(uint32_t mul, uint32_t add) {
    uint64_t carry = add;
    for (auto& limb : limbs_) {
        uint64_t cur = static_cast<uint64_t>(limb) * mul + carry;
        limb = static_cast<uint32_t>(cur);
        carry = cur >> 32;
    }
    while (carry) {
        limbs_.push_back(static_cast<uint32_t>(carry));
        carry >>= 32;
    }
    trim();
}

uint32_t BigUint::divmod_small(uint32_t den) {
    if (den == 0) throw DomainError("division by zero");
    uint64_t rem = 0;
    for (size_t i = limbs_.size(); i-- > 0;) {
        uint64_t cur = (rem << 32) | limbs_[i];
        limbs_[i] = static_cast<uint32_t>(cur / den);
        rem = cur % den;
    }
    trim();
    return static_cast<uint32_t>(rem);
}

BigUint BigUint::isqrt(const BigUint& n) {
    if (n.is_zero()) return BigUint();
    if (n.bit_length() <= 1) return BigUint(1);
    // Start from a power of two >= sqrt(n); Newton steps decrease
    // monotonically to floor(sqrt(n)).
    BigUint x = one_shl((n.bit_length() + 1) / 2);
    for (;;) {
        BigUint y = divmod(x + divmod(n, x).first, BigUint(2)).first;
        if (cmp(y, x) >= 0) return x;
        x = y;
    }
}

std::string BigUint::to_decimal() const {
    if (is_zero()) return "0";
    BigUint tmp = *this;
    std::string out;
    while (!tmp.is_zero()) {
        uint32_t chunk = tmp.divmod_small(1000000000u);
        if (tmp.is_zero()) {
            out = std::to_string(chunk) + out;
        } else {
            std::string part = std::to_string(chunk);
            out = std::string(9 - part.size(), '0') + part + out;
        }
    }
    return out;
}

uint64_t BigUint::to_u64() const {
    if (limbs_.size() > 2) throw DomainError("BigUint too large for u64");
    uint64_t v = 0;
    if (limbs_.size() > 1) v = static_cast<uint64_t>(limbs_[1]) << 32;
    if (!limbs_.empty()) v |= limbs_[0];
    return v;
}

} // namespace shotit
