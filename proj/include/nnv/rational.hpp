#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nnv {

/// Exact rational number in canonical form (positive denominator, coprime parts).
///
/// Thin value wrapper around GMP's mpq_class. Every operation leaves the value
/// canonical, so equality is structural and hashing is well defined.
class Rational {
public:
    Rational() = default;
    Rational(const Rational&) = default;
    Rational& operator=(const Rational&) = default;
    // GMP reports allocation failure by aborting, so moves never throw; saying so
    // lets containers move instead of copy.
    Rational(Rational&& o) noexcept : value_(std::move(o.value_)) {}
    Rational& operator=(Rational&& o) noexcept {
        value_.swap(o.value_);
        return *this;
    }
    Rational(long v) : value_(v) {}  // NOLINT(google-explicit-constructor)
    Rational(int v) : value_(v) {}   // NOLINT(google-explicit-constructor)
    Rational(long num, long den);
    explicit Rational(mpq_class v) : value_(std::move(v)) { value_.canonicalize(); }

    const mpq_class& raw() const { return value_; }

    int sign() const { return sgn(value_); }
    bool is_zero() const { return sign() == 0; }
    Rational abs() const { return Rational(mpq_class(::abs(value_))); }
    std::string str() const { return value_.get_str(); }
    double to_double() const { return value_.get_d(); }

    Rational operator-() const { return Rational(mpq_class(-value_)); }
    Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
    Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
    Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
    Rational& operator/=(const Rational& o);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.value_ == b.value_; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        int c = cmp(a.value_, b.value_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    std::size_t hash() const;

private:
    mpq_class value_;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

Rational max(const Rational& a, const Rational& b);
Rational min(const Rational& a, const Rational& b);
inline Rational relu(const Rational& t) { return t.sign() > 0 ? t : Rational(0); }

/// Parses "p", "p/q" or a signed decimal "d.dd" exactly.
/// Throws std::invalid_argument on malformed text or a zero denominator.
Rational parse_rational(std::string_view text);

/// Rational extended by +infinity. Only used for radii (epsilon, delta).
class ExtRational {
public:
    ExtRational() = default;
    ExtRational(Rational v) : value_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
    ExtRational(int v) : value_(v) {}                  // NOLINT(google-explicit-constructor)
    static ExtRational infinity() { ExtRational e; e.infinite_ = true; return e; }

    bool is_infinite() const { return infinite_; }
    /// Throws std::logic_error when infinite.
    const Rational& value() const;

    friend bool operator==(const ExtRational& a, const ExtRational& b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }
    /// x <= inf always; inf <= x only when x is inf.
    friend bool operator<=(const Rational& a, const ExtRational& b) { return b.infinite_ || a <= b.value_; }

    std::string str() const { return infinite_ ? "inf" : value_.str(); }

private:
    Rational value_;
    bool infinite_ = false;
};

/// Accepts everything parse_rational does plus "inf".
ExtRational parse_ext_rational(std::string_view text);

using RatVector = std::vector<Rational>;

enum class Metric { L1, Linf };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view text);

/// d_1 or d_inf distance. Throws std::invalid_argument on dimension mismatch.
Rational dist(Metric metric, std::span<const Rational> x, std::span<const Rational> y);

/// Inner product; throws on dimension mismatch.
Rational dot(std::span<const Rational> a, std::span<const Rational> b);

std::string to_string(std::span<const Rational> v);

}  // namespace nnv

template <>
struct std::hash<nnv::Rational> {
    std::size_t operator()(const nnv::Rational& r) const { return r.hash(); }
};
