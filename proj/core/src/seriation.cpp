#include "watson/seriation.hpp"

#include "watson/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace watson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class DistanceMatrix {
public:
    explicit DistanceMatrix(const ProportionMatrix& m) : n_(m.bar_count()), d_(n_ * n_, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double dij = l1(m.rows[i], m.rows[j]);
                d_[i * n_ + j] = dij;
                d_[j * n_ + i] = dij;
            }
        }
    }

    [[nodiscard]] auto size() const noexcept -> std::size_t { return n_; }
    [[nodiscard]] auto operator()(std::size_t i, std::size_t j) const -> double {
        return d_[i * n_ + j];
    }

    [[nodiscard]] auto cost(std::span<const std::size_t> perm) const -> double {
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < perm.size(); ++i) {
            total += (*this)(perm[i], perm[i + 1]);
        }
        return total;
    }

private:
    std::size_t n_;
    std::vector<double> d_;
};

struct Candidate {
    std::vector<std::size_t> perm;
    double cost = 0.0;
    double separation = 0.0;
};

// Lower cost, then larger separation, then lexicographically smaller perm.
auto preferred(const Candidate& a, const Candidate& b) -> bool {
    if (a.cost < b.cost - kTieTolerance) {
        return true;
    }
    if (a.cost > b.cost + kTieTolerance) {
        return false;
    }
    if (a.separation > b.separation + kTieTolerance) {
        return true;
    }
    if (a.separation < b.separation - kTieTolerance) {
        return false;
    }
    return a.perm < b.perm;
}

auto make_candidate(const DistanceMatrix& d, std::vector<std::size_t> perm) -> Candidate {
    Candidate c;
    c.cost = d.cost(perm);
    c.separation = perm.empty() ? 0.0 : d(perm.front(), perm.back());
    c.perm = std::move(perm);
    return c;
}

auto finish(const ProportionMatrix& m, Candidate best, bool exact) -> Ordering {
    Ordering out;
    out.variable = m.bar_variable;
    out.cost = path_cost(m, best.perm);
    out.endpoint_separation = best.perm.empty() ? 0.0
                                                : l1(m.rows[best.perm.front()],
                                                     m.rows[best.perm.back()]);
    out.perm = std::move(best.perm);
    out.exact = exact;
    return out;
}

void require_nonempty(const ProportionMatrix& m) {
    if (m.bar_count() == 0) {
        throw Error("EmptyMatrix", "seriation needs at least one bar");
    }
}

// Minimum open-path cost for every (start, visited set, end) triple.
class HeldKarp {
public:
    explicit HeldKarp(const DistanceMatrix& d)
        : d_(d), n_(d.size()), masks_(std::size_t{1} << n_), table_(n_ * masks_ * n_, kInf) {
        for (std::size_t s = 0; s < n_; ++s) {
            at(s, bit(s), s) = 0.0;
            for (std::size_t mask = 1; mask < masks_; ++mask) {
                if ((mask & bit(s)) == 0) {
                    continue;
                }
                for (std::size_t e = 0; e < n_; ++e) {
                    const double base = at(s, mask, e);
                    if (base == kInf) {
                        continue;
                    }
                    for (std::size_t v = 0; v < n_; ++v) {
                        if ((mask & bit(v)) != 0) {
                            continue;
                        }
                        double& slot = at(s, mask | bit(v), v);
                        slot = std::min(slot, base + d_(e, v));
                    }
                }
            }
        }
    }

    [[nodiscard]] auto full() const noexcept -> std::size_t { return masks_ - 1; }

    [[nodiscard]] auto best(std::size_t start, std::size_t mask, std::size_t end) const -> double {
        return table_[(start * masks_ + mask) * n_ + end];
    }

    /// Lexicographically smallest path from `start` to `end` whose cost stays
    /// within `budget`.
    [[nodiscard]] auto smallest_path(std::size_t start, std::size_t end, double budget) const
        -> std::vector<std::size_t> {
        std::vector<std::size_t> path{start};
        std::size_t visited = bit(start);
        double spent = 0.0;
        while (path.size() < n_) {
            const std::size_t remaining = full() & ~visited;
            const std::size_t cur = path.back();
            bool extended = false;
            for (std::size_t v = 0; v < n_; ++v) {
                if ((remaining & bit(v)) == 0 || (v == end && remaining != bit(end))) {
                    continue;
                }
                // Cheapest way to cover `remaining` from v and stop at end; the
                // metric is symmetric so this is the end-rooted table read backwards.
                const double tail = best(end, remaining, v);
                if (spent + d_(cur, v) + tail <= budget) {
                    spent += d_(cur, v);
                    path.push_back(v);
                    visited |= bit(v);
                    extended = true;
                    break;
                }
            }
            if (!extended) {
                throw Error("InternalError", "held-karp reconstruction found no feasible step");
            }
        }
        return path;
    }

private:
    static auto bit(std::size_t i) -> std::size_t { return std::size_t{1} << i; }

    auto at(std::size_t start, std::size_t mask, std::size_t end) -> double& {
        return table_[(start * masks_ + mask) * n_ + end];
    }

    const DistanceMatrix& d_;
    std::size_t n_;
    std::size_t masks_;
    std::vector<double> table_;
};

auto nearest_neighbour_path(const DistanceMatrix& d, std::size_t start)
    -> std::vector<std::size_t> {
    const std::size_t n = d.size();
    std::vector<bool> used(n, false);
    std::vector<std::size_t> path{start};
    used[start] = true;
    while (path.size() < n) {
        const std::size_t cur = path.back();
        std::size_t pick = n;
        double pick_d = kInf;
        for (std::size_t v = 0; v < n; ++v) {
            if (!used[v] && d(cur, v) < pick_d) {
                pick = v;
                pick_d = d(cur, v);
            }
        }
        used[pick] = true;
        path.push_back(pick);
    }
    return path;
}

// Best-improvement 2-opt on an open path. Reversing perm[i..j] swaps the edge
// entering i and the edge leaving j; a segment touching either end of the
// path only changes one edge.
void two_opt(const DistanceMatrix& d, std::vector<std::size_t>& perm) {
    const std::size_t n = perm.size();
    if (n < 3) {
        return;
    }
    for (;;) {
        double best_delta = -kTieTolerance;
        std::size_t best_i = 0;
        std::size_t best_j = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (i == 0 && j == n - 1) {
                    continue;
                }
                double delta = 0.0;
                if (i > 0) {
                    delta += d(perm[i - 1], perm[j]) - d(perm[i - 1], perm[i]);
                }
                if (j + 1 < n) {
                    delta += d(perm[i], perm[j + 1]) - d(perm[j], perm[j + 1]);
                }
                if (delta < best_delta) {
                    best_delta = delta;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i == best_j) {
            return;
        }
        std::reverse(perm.begin() + static_cast<std::ptrdiff_t>(best_i),
                     perm.begin() + static_cast<std::ptrdiff_t>(best_j) + 1);
    }
}

}  // namespace

auto l1(std::span<const double> u, std::span<const double> v) -> double {
    if (u.size() != v.size()) {
        throw Error("LengthMismatch", "l1 needs vectors of equal length",
                    {{"left", u.size()}, {"right", v.size()}});
    }
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        total += std::abs(u[i] - v[i]);
    }
    return total;
}

auto path_cost(const ProportionMatrix& m, std::span<const std::size_t> perm) -> double {
    const std::size_t n = m.bar_count();
    std::vector<bool> seen(n, false);
    if (perm.size() != n) {
        throw Error("NotAPermutation", "permutation length differs from bar count");
    }
    for (const auto p : perm) {
        if (p >= n || seen[p]) {
            throw Error("NotAPermutation", "invalid or repeated index in permutation");
        }
        seen[p] = true;
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < perm.size(); ++i) {
        total += l1(m.rows[perm[i]], m.rows[perm[i + 1]]);
    }
    return total;
}

auto seriate_exact(const ProportionMatrix& m, std::size_t max_bars) -> Ordering {
    require_nonempty(m);
    const std::size_t n = m.bar_count();
    if (n > max_bars) {
        throw Error("TooLarge",
                    std::to_string(n) + " bars exceed the exact solver limit of " +
                        std::to_string(max_bars),
                    {{"bars", n}, {"limit", max_bars}});
    }
    const DistanceMatrix d(m);
    const HeldKarp hk(d);

    double optimum = kInf;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = 0; e < n; ++e) {
            optimum = std::min(optimum, hk.best(s, hk.full(), e));
        }
    }
    const double budget = optimum + kTieTolerance;

    double widest = -kInf;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = 0; e < n; ++e) {
            if (hk.best(s, hk.full(), e) <= budget) {
                widest = std::max(widest, d(s, e));
            }
        }
    }

    std::vector<std::size_t> best;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = 0; e < n; ++e) {
            if (hk.best(s, hk.full(), e) > budget || d(s, e) < widest - kTieTolerance) {
                continue;
            }
            auto path = hk.smallest_path(s, e, budget);
            if (best.empty() || path < best) {
                best = std::move(path);
            }
        }
    }
    return finish(m, make_candidate(d, std::move(best)), true);
}

auto seriate_heuristic(const ProportionMatrix& m) -> Ordering {
    require_nonempty(m);
    const DistanceMatrix d(m);
    std::optional<Candidate> best;
    for (std::size_t s = 0; s < d.size(); ++s) {
        auto path = nearest_neighbour_path(d, s);
        two_opt(d, path);
        auto reversed = path;
        std::reverse(reversed.begin(), reversed.end());
        for (auto* p : {&path, &reversed}) {
            auto cand = make_candidate(d, std::move(*p));
            if (!best || preferred(cand, *best)) {
                best = std::move(cand);
            }
        }
    }
    return finish(m, std::move(*best), false);
}

auto seriate(const ProportionMatrix& m) -> Ordering {
    return m.bar_count() <= kMaxExactBars ? seriate_exact(m) : seriate_heuristic(m);
}

auto order_by_count(const FreqTable& table) -> Ordering {
    if (table.rank() != 1) {
        throw Error("WrongArity", "order_by_count needs a 1-variable table",
                    {{"rank", table.rank()}});
    }
    const auto counts = table.counts();
    Ordering out;
    out.variable = table.variable(0).name;
    out.perm.resize(counts.size());
    std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
    std::stable_sort(out.perm.begin(), out.perm.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    return out;
}

void to_json(nlohmann::json& j, const Ordering& o) {
    j = nlohmann::json{{"variable", o.variable},
                       {"perm", o.perm},
                       {"cost", o.cost},
                       {"endpoint_separation", o.endpoint_separation},
                       {"exact", o.exact}};
}

}  // namespace watson
