#include "scg/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "scg/errors.hpp"

namespace scg::privacy {

ReleaseMode release_mode_for(ZoneTag tag) {
    switch (tag) {
    case ZoneTag::Premises: return ReleaseMode::Raw;
    case ZoneTag::ExternalOperations: return ReleaseMode::Pseudonymized;
    case ZoneTag::ThirdParty: return ReleaseMode::Anonymized;
    }
    return ReleaseMode::Raw;
}

std::map<std::string, Scalar> minimize(const std::map<std::string, Scalar>& record,
                                       const std::set<std::string>& allowlist) {
    std::map<std::string, Scalar> out;
    for (const auto& [key, value] : record)
        if (allowlist.count(key)) out.emplace(key, value);
    return out;
}

std::string pseudonymize(const std::string& value, const crypto::Bytes& key,
                         const std::string& context) {
    if (key.size() < 16)
        throw Error(ErrorCode::KeyTooShort, "pseudonymization key must be >= 16 bytes");
    std::string input = context;
    input.push_back('\0');
    input += value;
    auto mac = crypto::hmac_sha256(key, input);
    return crypto::to_hex(mac.data(), 16); // 32 lowercase hex chars
}

bool looks_like_pseudonym(const std::string& text) {
    if (text.size() != 32) return false;
    return std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

namespace {

constexpr double kMassTolerance = 1e-9;

void check_distributions(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw Error(ErrorCode::ValidationError, "distributions have mismatched supports");
    if (p.empty()) throw Error(ErrorCode::ValidationError, "empty distribution");
    double sp = 0, sq = 0;
    for (double v : p) {
        if (v < -kMassTolerance) throw Error(ErrorCode::ValidationError, "negative mass");
        sp += v;
    }
    for (double v : q) {
        if (v < -kMassTolerance) throw Error(ErrorCode::ValidationError, "negative mass");
        sq += v;
    }
    if (std::abs(sp - 1.0) > kMassTolerance || std::abs(sq - 1.0) > kMassTolerance)
        throw Error(ErrorCode::ValidationError, "distributions must each sum to 1");
}

} // namespace

double emd_equal_distance(const std::vector<double>& p, const std::vector<double>& q) {
    check_distributions(p, q);
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
    return sum / 2.0;
}

double emd_ordered(const std::vector<double>& p, const std::vector<double>& q) {
    check_distributions(p, q);
    if (p.size() < 2)
        throw Error(ErrorCode::ValidationError, "ordered EMD needs at least 2 categories");
    double cumulative = 0, sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cumulative += p[i] - q[i];
        sum += std::abs(cumulative);
    }
    return sum / static_cast<double>(p.size() - 1);
}

void validate_table(const AnonTable& table) {
    if (table.rows.empty()) throw Error(ErrorCode::ValidationError, "table has no rows");
    if (table.columns.empty()) throw Error(ErrorCode::ValidationError, "table has no columns");
    for (const auto& row : table.rows)
        if (row.size() != table.columns.size())
            throw Error(ErrorCode::ValidationError, "row arity mismatch");
    auto col_index = [&](const std::string& name) {
        auto it = std::find(table.columns.begin(), table.columns.end(), name);
        if (it == table.columns.end())
            throw Error(ErrorCode::ValidationError, "unknown column: " + name);
        return static_cast<std::size_t>(it - table.columns.begin());
    };
    col_index(table.sensitive);
    for (const auto& qi : table.quasi_identifiers) {
        col_index(qi);
        if (qi == table.sensitive)
            throw Error(ErrorCode::ValidationError,
                        "sensitive column cannot be a quasi-identifier");
    }
}

namespace {

std::size_t column_index(const AnonTable& table, const std::string& name) {
    auto it = std::find(table.columns.begin(), table.columns.end(), name);
    return static_cast<std::size_t>(it - table.columns.begin());
}

// Distinct sensitive values in distribution order: numeric sort for ordered
// attributes, lexicographic for categorical.
std::vector<std::string> sensitive_support(const AnonTable& table) {
    std::size_t si = column_index(table, table.sensitive);
    std::vector<std::string> values;
    for (const auto& row : table.rows) values.push_back(row[si]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (table.sensitive_kind == SensitiveKind::OrderedNumeric) {
        for (const auto& v : values) {
            try {
                std::size_t pos = 0;
                std::stod(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ValidationError,
                            "non-numeric sensitive value: " + v);
            }
        }
        std::sort(values.begin(), values.end(),
                  [](const std::string& a, const std::string& b) {
                      return std::stod(a) < std::stod(b);
                  });
    }
    return values;
}

std::vector<double> distribution_over(const std::vector<std::string>& support,
                                      const std::vector<std::string>& samples) {
    std::vector<double> dist(support.size(), 0.0);
    for (const auto& s : samples) {
        auto it = std::find(support.begin(), support.end(), s);
        dist[static_cast<std::size_t>(it - support.begin())] += 1.0;
    }
    for (double& v : dist) v /= static_cast<double>(samples.size());
    return dist;
}

} // namespace

TClosenessResult check_t_closeness(const AnonTable& table, double t) {
    validate_table(table);
    if (!(t > 0.0 && t <= 1.0))
        throw Error(ErrorCode::ValidationError, "t must be in (0, 1]");

    std::size_t si = column_index(table, table.sensitive);
    std::vector<std::size_t> qi_idx;
    for (const auto& qi : table.quasi_identifiers) qi_idx.push_back(column_index(table, qi));

    auto support = sensitive_support(table);
    std::vector<std::string> all;
    for (const auto& row : table.rows) all.push_back(row[si]);
    auto overall = distribution_over(support, all);

    std::map<std::vector<std::string>, std::vector<std::string>> classes;
    for (const auto& row : table.rows) {
        std::vector<std::string> key;
        for (std::size_t i : qi_idx) key.push_back(row[i]);
        classes[key].push_back(row[si]);
    }

    TClosenessResult result;
    for (const auto& [key, samples] : classes) {
        auto dist = distribution_over(support, samples);
        double emd = (table.sensitive_kind == SensitiveKind::OrderedNumeric && support.size() >= 2)
                         ? emd_ordered(dist, overall)
                         : emd_equal_distance(dist, overall);
        result.per_class.push_back({key, emd});
        result.max_emd = std::max(result.max_emd, emd);
    }
    result.satisfied = result.max_emd <= t;
    return result;
}

std::string Hierarchy::apply(const std::string& raw, int level) const {
    if (level <= 0) return raw;
    auto it = ladders.find(raw);
    if (it == ladders.end() || static_cast<std::size_t>(level) > it->second.size()) return "*";
    return it->second[static_cast<std::size_t>(level) - 1];
}

namespace {

AnonTable generalize(const AnonTable& table, const PrivacyParams& params,
                     const std::vector<int>& levels) {
    AnonTable out = table;
    for (std::size_t q = 0; q < table.quasi_identifiers.size(); ++q) {
        if (levels[q] == 0) continue;
        const auto& name = table.quasi_identifiers[q];
        auto hit = params.hierarchies.find(name);
        std::size_t ci = column_index(table, name);
        for (auto& row : out.rows) {
            row[ci] = hit == params.hierarchies.end() ? "*" : hit->second.apply(row[ci], levels[q]);
        }
    }
    return out;
}

// Rows belonging to equivalence classes smaller than k.
std::vector<std::size_t> undersized_rows(const AnonTable& table, int k) {
    std::vector<std::size_t> qi_idx;
    for (const auto& qi : table.quasi_identifiers) qi_idx.push_back(column_index(table, qi));
    std::map<std::vector<std::string>, std::vector<std::size_t>> classes;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<std::string> key;
        for (std::size_t i : qi_idx) key.push_back(table.rows[r][i]);
        classes[key].push_back(r);
    }
    std::vector<std::size_t> rows;
    for (const auto& [key, members] : classes)
        if (static_cast<int>(members.size()) < k)
            rows.insert(rows.end(), members.begin(), members.end());
    std::sort(rows.begin(), rows.end());
    return rows;
}

void enumerate_level_vectors(const std::vector<int>& max_levels, int target_sum,
                             std::vector<int>& current, std::size_t position,
                             const std::function<bool(const std::vector<int>&)>& visit,
                             bool& done) {
    if (done) return;
    if (position == max_levels.size()) {
        int sum = 0;
        for (int v : current) sum += v;
        if (sum == target_sum && visit(current)) done = true;
        return;
    }
    for (int level = 0; level <= max_levels[position] && !done; ++level) {
        current[position] = level;
        enumerate_level_vectors(max_levels, target_sum, current, position + 1, visit, done);
    }
}

} // namespace

AnonymizeResult anonymize(const AnonTable& table, const PrivacyParams& params) {
    validate_table(table);
    if (!(params.t > 0.0 && params.t <= 1.0))
        throw Error(ErrorCode::ValidationError, "t must be in (0, 1]");

    std::vector<int> max_levels;
    for (const auto& qi : table.quasi_identifiers) {
        auto it = params.hierarchies.find(qi);
        max_levels.push_back(it == params.hierarchies.end() ? 1 : it->second.levels);
    }

    std::size_t budget =
        static_cast<std::size_t>(params.suppression_budget * static_cast<double>(table.rows.size()));

    std::optional<AnonymizeResult> found;
    auto try_node = [&](const std::vector<int>& levels) {
        AnonTable candidate = generalize(table, params, levels);
        std::size_t suppressed = 0;
        if (params.k) {
            auto drop = undersized_rows(candidate, *params.k);
            if (drop.size() > budget) return false;
            suppressed = drop.size();
            if (!drop.empty()) {
                std::vector<std::vector<std::string>> kept;
                std::size_t di = 0;
                for (std::size_t r = 0; r < candidate.rows.size(); ++r) {
                    if (di < drop.size() && drop[di] == r) {
                        ++di;
                        continue;
                    }
                    kept.push_back(candidate.rows[r]);
                }
                candidate.rows = std::move(kept);
            }
            if (candidate.rows.empty()) return false;
        }
        auto check = check_t_closeness(candidate, params.t);
        if (!check.satisfied) return false;
        AnonymizeResult result;
        result.table = std::move(candidate);
        for (std::size_t q = 0; q < table.quasi_identifiers.size(); ++q)
            result.levels[table.quasi_identifiers[q]] = levels[q];
        result.suppressed = suppressed;
        found = std::move(result);
        return true;
    };

    int max_sum = 0;
    for (int v : max_levels) max_sum += v;
    for (int sum = 0; sum <= max_sum && !found; ++sum) {
        std::vector<int> current(max_levels.size(), 0);
        bool done = false;
        enumerate_level_vectors(max_levels, sum, current, 0, try_node, done);
    }
    if (!found)
        throw Error(ErrorCode::Infeasible,
                    "no generalization node satisfies the privacy constraints");
    return *found;
}

} // namespace scg::privacy
