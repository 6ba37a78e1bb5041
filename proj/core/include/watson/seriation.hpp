#pragma once

#include "watson/freqtable.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace watson {

/// Largest bar count the exact solver accepts.
inline constexpr std::size_t kMaxExactBars = 10;

/// Costs within this distance are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

struct Ordering {
    std::string variable;
    std::vector<std::size_t> perm;  // original category indices, display order
    double cost = 0.0;
    double endpoint_separation = 0.0;
    bool exact = false;

    friend auto operator==(const Ordering&, const Ordering&) -> bool = default;
};

/// Manhattan distance. Throws Error{"LengthMismatch"}.
[[nodiscard]] auto l1(std::span<const double> u, std::span<const double> v) -> double;

/// Sum of l1 distances between successive rows along `perm`.
/// Throws Error{"NotAPermutation"}.
[[nodiscard]] auto path_cost(const ProportionMatrix& m, std::span<const std::size_t> perm)
    -> double;

/// Open-path Held-Karp. Minimizes path cost, then maximizes the l1 distance
/// between the first and last bar, then takes the lexicographically smallest
/// index sequence. Throws Error{"TooLarge"} above `max_bars`.
[[nodiscard]] auto seriate_exact(const ProportionMatrix& m, std::size_t max_bars = kMaxExactBars)
    -> Ordering;

/// Nearest-neighbour construction from every start, each polished with 2-opt
/// to a local optimum; the best optimum under the same three-level preference
/// as seriate_exact wins.
[[nodiscard]] auto seriate_heuristic(const ProportionMatrix& m) -> Ordering;

/// Exact up to kMaxExactBars, heuristic beyond.
[[nodiscard]] auto seriate(const ProportionMatrix& m) -> Ordering;

/// Decreasing count, ties by original index. Throws Error{"WrongArity"}.
[[nodiscard]] auto order_by_count(const FreqTable& table) -> Ordering;

void to_json(nlohmann::json& j, const Ordering& o);

}  // namespace watson
