#include "nnv/linspec.hpp"

#include <stdexcept>
#include <string>

namespace nnv {

std::string_view relation_name(Relation r) {
    switch (r) {
        case Relation::LE: return "<=";
        case Relation::LT: return "<";
        case Relation::EQ: return "=";
    }
    return "?";
}

Relation parse_relation(std::string_view text) {
    if (text == "<=") return Relation::LE;
    if (text == "<") return Relation::LT;
    if (text == "=" || text == "==") return Relation::EQ;
    throw std::invalid_argument("unknown relation '" + std::string(text) + "' (expected <=, < or =)");
}

bool LinRow::satisfied_by(std::span<const Rational> x) const {
    Rational lhs = dot(coeffs, x);
    switch (rel) {
        case Relation::LE: return lhs <= rhs;
        case Relation::LT: return lhs < rhs;
        case Relation::EQ: return lhs == rhs;
    }
    return false;
}

LinSpec::LinSpec(std::size_t d, std::vector<LinRow> r) : dim(d) {
    for (auto& row : r) add(std::move(row));
}

void LinSpec::add(LinRow row) {
    if (row.coeffs.size() != dim)
        throw std::invalid_argument("row has " + std::to_string(row.coeffs.size()) + " coefficients, spec has dim " +
                                    std::to_string(dim));
    rows.push_back(std::move(row));
}

void LinSpec::add(std::initializer_list<std::pair<std::size_t, Rational>> terms, Relation rel, Rational rhs) {
    RatVector c(dim);
    for (const auto& [var, coeff] : terms) c.at(var) += coeff;
    add(LinRow{std::move(c), rel, std::move(rhs)});
}

bool LinSpec::satisfied_by(std::span<const Rational> x) const {
    if (x.size() != dim) throw std::invalid_argument("satisfied_by: dimension mismatch");
    for (const auto& row : rows)
        if (!row.satisfied_by(x)) return false;
    return true;
}

LinSpec LinSpec::widened(std::size_t extra) const {
    LinSpec out(dim + extra);
    for (const auto& row : rows) {
        LinRow r = row;
        r.coeffs.resize(dim + extra);
        out.rows.push_back(std::move(r));
    }
    return out;
}

BallSpec ball_spec(Metric metric, std::span<const Rational> center, const ExtRational& eps) {
    BallSpec ball;
    ball.metric = metric;
    ball.center.assign(center.begin(), center.end());
    ball.eps = eps;
    std::size_t n = center.size();
    if (eps.is_infinite()) {
        ball.spec = LinSpec(n);
        return ball;
    }
    const Rational& e = eps.value();
    if (metric == Metric::Linf) {
        ball.spec = LinSpec(n);
        for (std::size_t i = 0; i < n; ++i) {
            ball.spec.add({{i, 1}}, Relation::LE, center[i] + e);
            ball.spec.add({{i, -1}}, Relation::LE, -center[i] + e);
        }
        return ball;
    }
    ball.aux_count = n;
    ball.spec = LinSpec(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        // x_i - u_i <= c_i  and  -x_i - u_i <= -c_i
        ball.spec.add({{i, 1}, {n + i, -1}}, Relation::LE, center[i]);
        ball.spec.add({{i, -1}, {n + i, -1}}, Relation::LE, -center[i]);
    }
    RatVector sum(2 * n);
    for (std::size_t i = 0; i < n; ++i) sum[n + i] = 1;
    ball.spec.add(LinRow{std::move(sum), Relation::LE, e});
    return ball;
}

bool BallSpec::contains(std::span<const Rational> x) const { return dist(metric, x, center) <= eps; }

RatVector BallSpec::lift(std::span<const Rational> x) const {
    RatVector out(x.begin(), x.end());
    for (std::size_t i = 0; i < aux_count; ++i) out.push_back((x[i] - center[i]).abs());
    return out;
}

std::vector<LinRow> negate_row(const LinRow& row) {
    RatVector neg = row.coeffs;
    for (auto& c : neg) c = -c;
    switch (row.rel) {
        case Relation::LE: return {LinRow{neg, Relation::LT, -row.rhs}};
        case Relation::LT: return {LinRow{neg, Relation::LE, -row.rhs}};
        case Relation::EQ: return {LinRow{row.coeffs, Relation::LT, row.rhs}, LinRow{neg, Relation::LT, -row.rhs}};
    }
    return {};
}

}  // namespace nnv
