#include "nnv/rational.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <sstream>

namespace nnv {

Rational::Rational(long num, long den) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    value_ = mpq_class(num, den);
    value_.canonicalize();
}

Rational& Rational::operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("rational: division by zero");
    value_ /= o.value_;
    return *this;
}

std::size_t Rational::hash() const {
    // The string form is canonical; this is not on any hot path.
    return std::hash<std::string>{}(value_.get_str());
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }
Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

[[noreturn]] void malformed(std::string_view text) {
    throw std::invalid_argument("malformed rational: '" + std::string(text) + "'");
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    mpq_class q;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = s.substr(0, slash);
        auto den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) malformed(text);
        mpz_class d(std::string(den), 10);
        if (d == 0) throw std::invalid_argument("rational: zero denominator in '" + std::string(text) + "'");
        q = mpq_class(mpz_class(std::string(num), 10), d);
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        auto whole = s.substr(0, dot);
        auto frac = s.substr(dot + 1);
        if ((whole.empty() && frac.empty()) || (!whole.empty() && !all_digits(whole)) ||
            (!frac.empty() && !all_digits(frac)))
            malformed(text);
        std::string digits = std::string(whole) + std::string(frac);
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        q = mpq_class(mpz_class(digits, 10), scale);
    } else {
        if (!all_digits(s)) malformed(text);
        q = mpq_class(mpz_class(std::string(s), 10));
    }
    q.canonicalize();
    if (negative) q = -q;
    return Rational(q);
}

const Rational& ExtRational::value() const {
    if (infinite_) throw std::logic_error("ExtRational: value() of infinity");
    return value_;
}

ExtRational parse_ext_rational(std::string_view text) {
    if (text == "inf" || text == "+inf" || text == "infinity") return ExtRational::infinity();
    return parse_rational(text);
}

std::string_view metric_name(Metric m) { return m == Metric::L1 ? "l1" : "linf"; }

Metric parse_metric(std::string_view text) {
    if (text == "l1" || text == "L1") return Metric::L1;
    if (text == "linf" || text == "Linf" || text == "inf") return Metric::Linf;
    throw std::invalid_argument("unknown metric '" + std::string(text) + "' (expected l1 or linf)");
}

Rational dist(Metric metric, std::span<const Rational> x, std::span<const Rational> y) {
    if (x.size() != y.size()) throw std::invalid_argument("dist: dimension mismatch");
    Rational acc;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Rational d = (x[i] - y[i]).abs();
        if (metric == Metric::L1) acc += d;
        else if (acc < d) acc = d;
    }
    return acc;
}

Rational dot(std::span<const Rational> a, std::span<const Rational> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    Rational acc;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].is_zero()) acc += a[i] * b[i];
    return acc;
}

std::string to_string(std::span<const Rational> v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

}  // namespace nnv
