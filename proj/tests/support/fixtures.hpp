#pragma once

#include "watson/error.hpp"
#include "watson/freqtable.hpp"

#include <random>
#include <string>
#include <vector>

namespace fixture {

inline auto var(std::string name, std::vector<std::string> cats) -> watson::Variable {
    return watson::Variable{std::move(name), std::move(cats), std::nullopt};
}

/// Categories "<prefix>0", "<prefix>1", ...
inline auto labels(const std::string& prefix, std::size_t n) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(prefix + std::to_string(i));
    }
    return out;
}

inline auto one_way(const std::vector<std::string>& cats, std::vector<watson::Count> counts)
    -> watson::FreqTable {
    return watson::FreqTable(watson::Schema{{var("A", cats)}}, std::move(counts));
}

inline auto two_way(const std::vector<std::vector<watson::Count>>& rows) -> watson::FreqTable {
    std::vector<watson::Count> flat;
    for (const auto& r : rows) {
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return watson::FreqTable(
        watson::Schema{{var("A", labels("a", rows.size())), var("B", labels("b", rows[0].size()))}},
        std::move(flat));
}

inline auto random_table(std::mt19937_64& rng, const std::vector<std::size_t>& extents,
                         int max_count = 20) -> watson::FreqTable {
    watson::Schema schema;
    std::size_t cells = 1;
    for (std::size_t a = 0; a < extents.size(); ++a) {
        const std::string name(1, static_cast<char>('A' + a));
        schema.variables.push_back(var(name, labels(std::string(1, static_cast<char>('a' + a)),
                                                    extents[a])));
        cells *= extents[a];
    }
    std::uniform_int_distribution<int> count(0, max_count);
    std::vector<watson::Count> counts(cells);
    for (auto& c : counts) {
        c = static_cast<watson::Count>(count(rng));
    }
    return watson::FreqTable(std::move(schema), std::move(counts));
}

/// Runs `fn` and returns the Error code it throws, or "" when it does not throw.
template <typename Fn>
auto error_code(Fn&& fn) -> std::string {
    try {
        fn();
    } catch (const watson::Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace fixture
