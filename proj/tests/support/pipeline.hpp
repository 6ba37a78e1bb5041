#pragma once

// Random table-operation pipelines run twice: once through FreqTable and once
// on raw records with oracle::RawData, then compared cell by cell.

#include "support/oracles.hpp"

#include "watson/freqtable.hpp"
#include "watson/ingest.hpp"

#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace pipeline {

inline auto random_raw(std::mt19937_64& rng, std::size_t max_records) -> oracle::RawData {
    std::uniform_int_distribution<std::size_t> nvars(1, 4);
    std::uniform_int_distribution<std::size_t> ncats(1, 5);
    std::uniform_int_distribution<std::size_t> nrec(0, max_records);
    oracle::RawData raw;
    const std::size_t k = nvars(rng);
    std::vector<std::size_t> sizes;
    for (std::size_t v = 0; v < k; ++v) {
        raw.names.push_back("v" + std::to_string(v));
        sizes.push_back(ncats(rng));
    }
    const std::size_t n = nrec(rng);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::string> row;
        for (std::size_t v = 0; v < k; ++v) {
            row.push_back("c" + std::to_string(std::uniform_int_distribution<std::size_t>(
                                    0, sizes[v] - 1)(rng)));
        }
        raw.rows.push_back(row);
    }
    // Categories in first-appearance order, as inference produces them.
    raw.categories.assign(k, {});
    for (const auto& row : raw.rows) {
        for (std::size_t v = 0; v < k; ++v) {
            auto& cats = raw.categories[v];
            if (std::find(cats.begin(), cats.end(), row[v]) == cats.end()) {
                cats.push_back(row[v]);
            }
        }
    }
    return raw;
}

inline auto to_csv(const oracle::RawData& raw) -> std::string {
    std::string out;
    for (std::size_t v = 0; v < raw.names.size(); ++v) {
        out += (v ? "," : "") + raw.names[v];
    }
    out += "\n";
    for (const auto& row : raw.rows) {
        for (std::size_t v = 0; v < row.size(); ++v) {
            out += (v ? "," : "") + row[v];
        }
        out += "\n";
    }
    return out;
}

/// Exact comparison of variable names, category lists and every cell.
inline auto matches(const watson::FreqTable& t, const oracle::RawData& raw, std::string* why)
    -> bool {
    if (t.rank() != raw.names.size()) {
        *why = "rank";
        return false;
    }
    for (std::size_t a = 0; a < t.rank(); ++a) {
        if (t.variable(a).name != raw.names[a] || t.variable(a).categories != raw.categories[a]) {
            *why = "variable " + raw.names[a];
            return false;
        }
    }
    const auto tally = raw.tally();
    std::vector<std::size_t> idx(t.rank(), 0);
    for (std::size_t flat = 0; flat < t.cell_count(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t a = t.rank(); a-- > 0;) {
            idx[a] = rem % t.extent(a);
            rem /= t.extent(a);
        }
        const auto it = tally.find(idx);
        const watson::Count expect = it == tally.end() ? 0 : it->second;
        if (t.counts()[flat] != expect) {
            *why = "cell " + std::to_string(flat);
            return false;
        }
    }
    if (t.total() != raw.rows.size()) {
        *why = "total";
        return false;
    }
    return true;
}

struct Outcome {
    bool ok = true;
    std::string log;
};

/// Builds from CSV, then applies up to `max_ops` random operations to both sides.
inline auto run(std::mt19937_64& rng, std::size_t max_records, std::size_t max_ops) -> Outcome {
    auto raw = random_raw(rng, max_records);
    Outcome out;
    std::ostringstream log;
    if (raw.rows.empty()) {
        // Inference needs at least one category per variable; seed one record.
        std::vector<std::string> row(raw.names.size(), "c0");
        raw.rows.push_back(row);
        raw.categories.assign(raw.names.size(), {"c0"});
    }
    const auto records = watson::parse_csv(to_csv(raw));
    auto table = watson::build_table(records, watson::infer_schema(records));
    std::string why;
    if (!matches(table, raw, &why)) {
        return {false, "build: " + why};
    }
    const std::size_t ops = std::uniform_int_distribution<std::size_t>(0, max_ops)(rng);
    int label = 0;
    for (std::size_t step = 0; step < ops; ++step) {
        const std::size_t v = std::uniform_int_distribution<std::size_t>(0, raw.names.size() - 1)(rng);
        const std::string name = raw.names[v];
        auto& cats = raw.categories[v];
        switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
            case 0: {  // merge
                if (cats.size() < 2) {
                    break;
                }
                std::vector<std::string> pool = cats;
                std::shuffle(pool.begin(), pool.end(), rng);
                const std::size_t take =
                    std::uniform_int_distribution<std::size_t>(2, pool.size())(rng);
                pool.resize(take);
                const std::string merged = "m" + std::to_string(label++);
                table = watson::merge_categories(table, name, pool, merged);
                raw.merge(name, pool, merged);
                log << "merge " << name << ";";
                break;
            }
            case 1: {  // remove
                if (cats.size() < 2) {
                    break;
                }
                const std::string victim =
                    cats[std::uniform_int_distribution<std::size_t>(0, cats.size() - 1)(rng)];
                table = watson::remove_category(table, name, victim);
                raw.remove(name, victim);
                log << "remove " << name << ":" << victim << ";";
                break;
            }
            case 2: {  // add
                const std::string fresh = "n" + std::to_string(label++);
                table = watson::add_category(table, name, fresh);
                raw.add(name, fresh);
                log << "add " << name << ";";
                break;
            }
            case 3: {  // marginalize onto a non-empty subset
                std::vector<std::string> keep;
                for (const auto& n : raw.names) {
                    if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) {
                        keep.push_back(n);
                    }
                }
                if (keep.empty()) {
                    keep.push_back(name);
                }
                table = watson::marginalize(table, keep);
                raw.keep(keep);
                log << "marginalize;";
                break;
            }
            default: {  // permute
                std::vector<std::string> order = raw.names;
                std::shuffle(order.begin(), order.end(), rng);
                table = watson::permute_axes(table, order);
                raw.permute(order);
                log << "permute;";
                break;
            }
        }
        if (!matches(table, raw, &why)) {
            out.ok = false;
            log << " mismatch: " << why;
            break;
        }
    }
    out.log = log.str();
    return out;
}

}  // namespace pipeline
