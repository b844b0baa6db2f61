#pragma once

// Exhaustive small 3-CNF formulas, one representative per class under variable
// renaming and polarity flips. Both operations preserve satisfiability and the
// verdicts of the hardness gadgets (the gadget is symmetric under x -> 1 - x).

#include "nnv/reductions.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <numeric>
#include <vector>

namespace nnv::testing {

using Clause = std::array<int, 3>;

inline bool satisfiable(const Cnf& cnf) {
    for (unsigned bits = 0; bits < (1u << cnf.num_vars); ++bits) {
        bool all = true;
        for (const auto& c : cnf.clauses) {
            bool any = false;
            for (int l : c) {
                bool value = (bits >> (std::abs(l) - 1)) & 1u;
                any = any || (l > 0 ? value : !value);
            }
            if (!any) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

/// Renames the variables that occur to 1..k in order of first occurrence.
inline Cnf compact(const std::vector<Clause>& clauses) {
    std::map<int, int> rename;
    Cnf cnf;
    for (auto c : clauses) {
        for (int& l : c) {
            int v = std::abs(l);
            auto [it, inserted] = rename.try_emplace(v, static_cast<int>(rename.size()) + 1);
            l = l > 0 ? it->second : -it->second;
        }
        cnf.clauses.push_back(c);
    }
    cnf.num_vars = rename.size();
    return cnf;
}

/// All formulas over at most `vars` variables with 1..`max_clauses` distinct
/// clauses (literal repetition allowed), up to symmetry.
inline std::vector<Cnf> canonical_formulas(int vars, std::size_t max_clauses) {
    std::vector<int> lits;
    for (int v = 1; v <= vars; ++v) lits.insert(lits.end(), {v, -v});
    std::sort(lits.begin(), lits.end());
    std::vector<Clause> clauses;
    for (std::size_t a = 0; a < lits.size(); ++a)
        for (std::size_t b = a; b < lits.size(); ++b)
            for (std::size_t c = b; c < lits.size(); ++c) clauses.push_back({lits[a], lits[b], lits[c]});
    std::map<Clause, std::size_t> index;
    for (std::size_t i = 0; i < clauses.size(); ++i) index[clauses[i]] = i;

    std::vector<std::vector<std::size_t>> images;
    std::vector<int> perm(static_cast<std::size_t>(vars));
    std::iota(perm.begin(), perm.end(), 1);
    do {
        for (unsigned flips = 0; flips < (1u << vars); ++flips) {
            std::vector<std::size_t> img(clauses.size());
            for (std::size_t i = 0; i < clauses.size(); ++i) {
                Clause c = clauses[i];
                for (int& l : c) {
                    int v = std::abs(l);
                    int s = (l > 0 ? 1 : -1) * ((flips >> (v - 1)) & 1u ? -1 : 1);
                    l = s * perm[static_cast<std::size_t>(v - 1)];
                }
                std::sort(c.begin(), c.end());
                img[i] = index.at(c);
            }
            images.push_back(std::move(img));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<Cnf> out;
    std::vector<std::size_t> set;
    std::vector<std::size_t> mapped;
    auto is_canonical = [&] {
        for (const auto& img : images) {
            mapped.clear();
            for (std::size_t i : set) mapped.push_back(img[i]);
            std::sort(mapped.begin(), mapped.end());
            if (mapped < set) return false;
        }
        return true;
    };
    auto extend = [&](auto&& self, std::size_t from) -> void {
        if (!set.empty() && is_canonical()) {
            std::vector<Clause> f;
            for (std::size_t i : set) f.push_back(clauses[i]);
            out.push_back(compact(f));
        }
        if (set.size() == max_clauses) return;
        for (std::size_t i = from; i < clauses.size(); ++i) {
            set.push_back(i);
            self(self, i + 1);
            set.pop_back();
        }
    };
    extend(extend, 0);
    return out;
}

}  // namespace nnv::testing
