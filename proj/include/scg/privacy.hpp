#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scg/crypto.hpp"
#include "scg/message.hpp"

namespace scg::privacy {

enum class FieldTransform { Pass, Pseudonymize, Drop };
enum class ReleaseMode { Raw, Pseudonymized, Anonymized };

struct ZonePolicy {
    ZoneTag zone = ZoneTag::Premises;
    std::set<std::string> field_allowlist;
    std::map<std::string, FieldTransform> transforms;
    ReleaseMode release_mode = ReleaseMode::Raw;
};

// premises -> raw, external_operations -> pseudonymized,
// third_party -> anonymized (fixed mapping).
ReleaseMode release_mode_for(ZoneTag tag);

// Keeps only keys present in the allowlist; values untouched.
std::map<std::string, Scalar> minimize(const std::map<std::string, Scalar>& record,
                                       const std::set<std::string>& allowlist);

// Deterministic keyed one-way mapping; 32 lowercase hex chars. Distinct
// contexts decorrelate pseudonyms for the same value.
std::string pseudonymize(const std::string& value, const crypto::Bytes& key,
                         const std::string& context);

bool looks_like_pseudonym(const std::string& text);

// Variational form: (1/2) * sum |p_i - q_i|, for categorical attributes.
double emd_equal_distance(const std::vector<double>& p, const std::vector<double>& q);

// Cumulative form: (1/(m-1)) * sum_i |sum_{j<=i} (p_j - q_j)|, for attributes
// with a total order and unit spacing.
double emd_ordered(const std::vector<double>& p, const std::vector<double>& q);

enum class SensitiveKind { Categorical, OrderedNumeric };

struct AnonTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> quasi_identifiers;
    std::string sensitive;
    SensitiveKind sensitive_kind = SensitiveKind::Categorical;
};

void validate_table(const AnonTable& table);

struct ClassCloseness {
    std::vector<std::string> class_key; // the QI tuple
    double emd = 0.0;
};

struct TClosenessResult {
    bool satisfied = false;
    double max_emd = 0.0;
    std::vector<ClassCloseness> per_class;
};

TClosenessResult check_t_closeness(const AnonTable& table, double t);

// Per-QI generalization ladder: level 0 = raw value, last level always
// suppresses to "*". Values absent from the map generalize to "*" at any
// level above 0.
struct Hierarchy {
    std::map<std::string, std::vector<std::string>> ladders; // raw -> value per level >= 1
    int levels = 1; // number of generalized levels (excluding level 0)

    std::string apply(const std::string& raw, int level) const;
};

struct PrivacyParams {
    double t = 0.2;
    std::optional<int> k;
    std::map<std::string, Hierarchy> hierarchies; // by QI column
    double suppression_budget = 0.05;             // max fraction of rows suppressed
};

struct AnonymizeResult {
    AnonTable table;
    std::map<std::string, int> levels; // chosen generalization level per QI
    std::size_t suppressed = 0;
};

// Full-domain generalization lattice search, breadth-first by level sum from
// (0,...,0), lexicographic within a depth; first satisfying node wins.
// Throws Error{Infeasible} when even the fully generalized node fails.
AnonymizeResult anonymize(const AnonTable& table, const PrivacyParams& params);

} // namespace scg::privacy
