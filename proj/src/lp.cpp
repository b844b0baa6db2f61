#include "nnv/lp.hpp"

#include "lp_internal.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace nnv {

namespace {

thread_local std::size_t solve_count = 0;

/// Dense tableau simplex over GMP rationals, Bland's rule for both phases.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : rows_(storage()), obj_(cols + 1), basis_(rows, 0), cols_(cols), allowed_(cols, true) {
        // Storage is recycled between solves: every mpq_class owns heap memory.
        rows_.resize(rows);
        for (auto& row : rows_) {
            row.resize(cols + 1);
            for (auto& v : row)
                if (sgn(v) != 0) v = 0;
        }
    }

    mpq_class& at(std::size_t r, std::size_t c) { return rows_[r][c]; }
    mpq_class& rhs(std::size_t r) { return rows_[r][cols_]; }
    std::size_t& basis(std::size_t r) { return basis_[r]; }
    std::size_t rows() const { return rows_.size(); }
    void forbid(std::size_t c) { allowed_[c] = false; }

    /// Sets the objective "minimize cost . x" and prices it against the basis.
    void set_objective(const std::vector<mpq_class>& cost) {
        for (std::size_t j = 0; j <= cols_; ++j) obj_[j] = j < cols_ ? cost[j] : mpq_class(0);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const mpq_class& cb = cost[basis_[i]];
            if (sgn(cb) == 0) continue;
            for (std::size_t j = 0; j <= cols_; ++j)
                if (sgn(rows_[i][j]) != 0) obj_[j] -= cb * rows_[i][j];
        }
    }

    mpq_class objective_value() const { return -obj_[cols_]; }

    mpq_class value_of(std::size_t col) const {
        for (std::size_t i = 0; i < rows_.size(); ++i)
            if (basis_[i] == col) return rows_[i][cols_];
        return 0;
    }

    /// Runs to optimality or until `stop` returns true after a pivot.
    /// Returns false if the objective is unbounded below.
    template <typename Stop>
    bool optimize(Stop stop) {
        while (true) {
            if (stop()) return true;
            std::size_t enter = cols_;
            for (std::size_t j = 0; j < cols_; ++j)
                if (allowed_[j] && sgn(obj_[j]) < 0) {
                    enter = j;
                    break;
                }
            if (enter == cols_) return true;
            std::size_t leave = rows_.size();
            mpq_class best;
            for (std::size_t i = 0; i < rows_.size(); ++i) {
                if (sgn(rows_[i][enter]) <= 0) continue;
                mpq_class ratio = rows_[i][cols_] / rows_[i][enter];
                if (leave == rows_.size() || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == rows_.size()) return false;
            pivot(leave, enter);
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        auto& prow = rows_[r];
        mpq_class inv = 1 / prow[c];
        std::vector<std::size_t> nz;
        for (std::size_t j = 0; j <= cols_; ++j)
            if (sgn(prow[j]) != 0) {
                mpq_mul(prow[j].get_mpq_t(), prow[j].get_mpq_t(), inv.get_mpq_t());
                nz.push_back(j);
            }
        mpq_class f, prod;
        auto eliminate = [&](std::vector<mpq_class>& row) {
            if (sgn(row[c]) == 0) return;
            f = row[c];
            for (std::size_t j : nz) {
                mpq_mul(prod.get_mpq_t(), f.get_mpq_t(), prow[j].get_mpq_t());
                mpq_sub(row[j].get_mpq_t(), row[j].get_mpq_t(), prod.get_mpq_t());
            }
        };
        for (std::size_t i = 0; i < rows_.size(); ++i)
            if (i != r) eliminate(rows_[i]);
        eliminate(obj_);
        basis_[r] = c;
    }

    void drop_row(std::size_t r) {
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    }

private:
    static std::vector<std::vector<mpq_class>>& storage() {
        thread_local std::vector<std::vector<mpq_class>> pool;
        return pool;
    }

    std::vector<std::vector<mpq_class>>& rows_;
    std::vector<mpq_class> obj_;
    std::vector<std::size_t> basis_;
    std::size_t cols_;
    std::vector<bool> allowed_;
};

struct SlackLp {
    bool feasible = false;      // non-strict part feasible
    bool bounded = true;        // objective mode only
    mpq_class slack;            // t at termination
    RatVector point;
};

/// Solves the strict-slack LP. With `early_exit` the second phase stops at the
/// first basis with t > 0. With `cost`, strict rows are read as <= and the
/// second phase minimises cost . x instead.
SlackLp solve_slack_lp(const LinSpec& spec, bool early_exit, const RatVector* cost = nullptr) {
    ++solve_count;
    const std::size_t d = spec.dim;
    bool strict = !cost && std::any_of(spec.rows.begin(), spec.rows.end(),
                                       [](const LinRow& r) { return r.rel == Relation::LT; });

    // Rows "-c x_j <= 0" (c > 0) become sign constraints on x_j instead of rows.
    std::vector<bool> nonneg(d, false);
    std::vector<bool> sign_row(spec.rows.size(), false);
    for (std::size_t r = 0; r < spec.rows.size(); ++r) {
        const LinRow& row = spec.rows[r];
        if (row.rel != Relation::LE || !row.rhs.is_zero()) continue;
        std::size_t var = d, count = 0;
        for (std::size_t j = 0; j < d && count < 2; ++j)
            if (!row.coeffs[j].is_zero()) var = j, ++count;
        if (count == 1 && row.coeffs[var].sign() < 0) nonneg[var] = sign_row[r] = true;
    }

    // Column layout: x_j (plus x_j- when free), then t+ t-, then one slack per inequality, then artificials.
    std::vector<std::size_t> pos_col(d), neg_col(d, static_cast<std::size_t>(-1));
    std::size_t next_col = 0;
    for (std::size_t j = 0; j < d; ++j) {
        pos_col[j] = next_col++;
        if (!nonneg[j]) neg_col[j] = next_col++;
    }
    const std::size_t t_plus = next_col;
    const std::size_t first_slack = strict ? t_plus + 2 : t_plus;
    std::size_t m = (strict ? 1 : 0);
    std::size_t slacks = strict ? 1 : 0;
    for (std::size_t r = 0; r < spec.rows.size(); ++r) {
        if (sign_row[r]) continue;
        ++m;
        slacks += spec.rows[r].rel != Relation::EQ;
    }

    struct RowData {
        std::vector<std::pair<std::size_t, mpq_class>> entries;
        mpq_class rhs;
        std::ptrdiff_t slack = -1;
    };
    std::vector<RowData> data;
    data.reserve(m);
    std::size_t slack_col = first_slack;
    for (std::size_t r = 0; r < spec.rows.size(); ++r) {
        if (sign_row[r]) continue;
        const LinRow& row = spec.rows[r];
        RowData rd;
        for (std::size_t j = 0; j < d; ++j) {
            const auto& a = row.coeffs[j].raw();
            if (sgn(a) == 0) continue;
            rd.entries.emplace_back(pos_col[j], a);
            if (!nonneg[j]) rd.entries.emplace_back(neg_col[j], -a);
        }
        if (row.rel == Relation::LT && strict) {
            rd.entries.emplace_back(t_plus, 1);
            rd.entries.emplace_back(t_plus + 1, -1);
        }
        if (row.rel != Relation::EQ) rd.slack = static_cast<std::ptrdiff_t>(slack_col++);
        rd.rhs = row.rhs.raw();
        data.push_back(std::move(rd));
    }
    if (strict) {
        RowData cap;
        cap.entries = {{t_plus, 1}, {t_plus + 1, -1}};
        cap.rhs = 1;
        cap.slack = static_cast<std::ptrdiff_t>(slack_col++);
        data.push_back(std::move(cap));
    }

    std::vector<bool> needs_art(m);
    std::size_t arts = 0;
    for (std::size_t i = 0; i < m; ++i) {
        needs_art[i] = data[i].slack < 0 || sgn(data[i].rhs) < 0;
        arts += needs_art[i];
    }
    const std::size_t first_art = first_slack + slacks;
    const std::size_t cols = first_art + arts;

    Tableau tab(m, cols);
    std::size_t art_col = first_art;
    std::vector<mpq_class> phase1(cols);
    for (std::size_t i = 0; i < m; ++i) {
        int flip = sgn(data[i].rhs) < 0 ? -1 : 1;
        for (auto& [c, v] : data[i].entries) tab.at(i, c) += flip * v;
        if (data[i].slack >= 0) tab.at(i, static_cast<std::size_t>(data[i].slack)) = flip;
        tab.rhs(i) = flip * data[i].rhs;
        if (needs_art[i]) {
            tab.at(i, art_col) = 1;
            tab.basis(i) = art_col;
            phase1[art_col] = 1;
            ++art_col;
        } else {
            tab.basis(i) = static_cast<std::size_t>(data[i].slack);
        }
    }

    SlackLp result;
    if (arts > 0) {
        tab.set_objective(phase1);
        tab.optimize([] { return false; });
        if (sgn(tab.objective_value()) > 0) return result;
        // Drive zero-level artificials out of the basis; drop redundant rows.
        for (std::size_t i = tab.rows(); i-- > 0;) {
            if (tab.basis(i) < first_art) continue;
            std::size_t enter = cols;
            for (std::size_t j = 0; j < first_art; ++j)
                if (sgn(tab.at(i, j)) != 0) {
                    enter = j;
                    break;
                }
            if (enter == cols) tab.drop_row(i);
            else tab.pivot(i, enter);
        }
        for (std::size_t j = first_art; j < cols; ++j) tab.forbid(j);
    }
    result.feasible = true;

    if (cost) {
        std::vector<mpq_class> c(cols);
        for (std::size_t j = 0; j < d; ++j) {
            c[pos_col[j]] = (*cost)[j].raw();
            if (!nonneg[j]) c[neg_col[j]] = -(*cost)[j].raw();
        }
        tab.set_objective(c);
        result.bounded = tab.optimize([] { return false; });
        result.slack = tab.objective_value();
    } else if (strict) {
        std::vector<mpq_class> c(cols);
        c[t_plus] = -1;
        c[t_plus + 1] = 1;
        tab.set_objective(c);
        auto current_t = [&]() -> mpq_class { return tab.value_of(t_plus) - tab.value_of(t_plus + 1); };
        bool bounded = early_exit ? tab.optimize([&] { return sgn(current_t()) > 0; })
                                  : tab.optimize([] { return false; });
        if (!bounded) throw std::logic_error("strict-slack LP unbounded despite t <= 1");
        result.slack = current_t();
    } else {
        result.slack = 1;
    }
    result.point.reserve(d);
    for (std::size_t j = 0; j < d; ++j)
        result.point.push_back(
            Rational(nonneg[j] ? tab.value_of(pos_col[j]) : mpq_class(tab.value_of(pos_col[j]) - tab.value_of(neg_col[j]))));
    return result;
}

}  // namespace

std::size_t lp_solve_count() { return solve_count; }

Feasibility feasible(const LinSpec& spec) {
    auto lp = solve_slack_lp(spec, true);
    Feasibility f;
    if (!lp.feasible || sgn(lp.slack) <= 0) return f;
    f.feasible = true;
    f.witness = std::move(lp.point);
    if (!spec.satisfied_by(f.witness)) throw std::logic_error("simplex produced a point violating its own system");
    return f;
}

Optimum minimize_closure(const LinSpec& spec, const RatVector& cost) {
    if (cost.size() != spec.dim) throw std::invalid_argument("objective has the wrong dimension");
    auto lp = solve_slack_lp(spec, false, &cost);
    Optimum o;
    if (!lp.feasible) return o;
    if (!lp.bounded) {
        o.status = Optimum::Unbounded;
        return o;
    }
    o.status = Optimum::Optimal;
    o.value = Rational(lp.slack);
    o.point = std::move(lp.point);
    return o;
}

std::optional<Rational> max_slack(const LinSpec& spec) {
    auto lp = solve_slack_lp(spec, false);
    if (!lp.feasible) return std::nullopt;
    return Rational(lp.slack);
}

namespace {

struct FmRow {
    RatVector coeffs;
    bool strict = false;
    Rational rhs;

    auto key() const { return std::make_tuple(coeffs, strict, rhs); }
};

/// Scales so the first nonzero coefficient has magnitude 1; makes duplicates detectable.
FmRow normalized(FmRow row) {
    for (const auto& c : row.coeffs) {
        if (c.is_zero()) continue;
        Rational s = c.abs();
        for (auto& v : row.coeffs) v /= s;
        row.rhs /= s;
        break;
    }
    return row;
}

}  // namespace

bool fm_feasible(const LinSpec& spec, std::size_t max_dim) {
    if (spec.dim > max_dim)
        throw std::invalid_argument("fm_feasible: dimension " + std::to_string(spec.dim) + " exceeds guard " +
                                    std::to_string(max_dim));
    std::vector<FmRow> rows;
    for (const auto& row : spec.rows) {
        rows.push_back({row.coeffs, row.rel == Relation::LT, row.rhs});
        if (row.rel == Relation::EQ) {
            FmRow neg{row.coeffs, false, -row.rhs};
            for (auto& c : neg.coeffs) c = -c;
            rows.push_back(std::move(neg));
        }
    }
    for (std::size_t k = 0; k < spec.dim; ++k) {
        std::vector<FmRow> pos, neg;
        std::map<std::tuple<RatVector, bool, Rational>, FmRow> next;
        auto keep = [&](FmRow r) {
            r = normalized(std::move(r));
            next.emplace(r.key(), std::move(r));
        };
        for (auto& r : rows) {
            int s = r.coeffs[k].sign();
            if (s > 0) pos.push_back(std::move(r));
            else if (s < 0) neg.push_back(std::move(r));
            else keep(std::move(r));
        }
        for (const auto& p : pos)
            for (const auto& q : neg) {
                Rational fp = Rational(1) / p.coeffs[k];
                Rational fq = Rational(1) / (-q.coeffs[k]);
                FmRow c;
                c.coeffs.resize(spec.dim);
                for (std::size_t j = 0; j < spec.dim; ++j) c.coeffs[j] = fp * p.coeffs[j] + fq * q.coeffs[j];
                c.coeffs[k] = 0;
                c.strict = p.strict || q.strict;
                c.rhs = fp * p.rhs + fq * q.rhs;
                keep(std::move(c));
            }
        rows.clear();
        for (auto& [key, r] : next) rows.push_back(std::move(r));
    }
    for (const auto& r : rows) {
        if (r.strict ? !(Rational(0) < r.rhs) : !(Rational(0) <= r.rhs)) return false;
    }
    return true;
}

}  // namespace nnv
