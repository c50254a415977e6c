#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shelfalign/planogram.hpp"

namespace shelfalign {

/// Per-pair compliance label: matched, missing items, extra items, non-match.
enum class PairLabel { MT, MI, ME, NM };

std::string to_string(PairLabel label);
PairLabel pair_label_from_string(const std::string& s);

/// Traceback move that produced a cell. `up` consumes a detected entry
/// against a reference gap 'A'; `left` consumes a reference entry against a
/// detected gap 'D'.
enum class MoveDir : std::uint8_t { diag, up, left };

/// Score matrix with detected entries on rows (E+1) and reference entries on
/// columns (T+1).
struct ScoreMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> values;
    std::vector<MoveDir> moves;

    int at(int d, int t) const { return values[static_cast<std::size_t>(d) * cols + t]; }
    MoveDir move_at(int d, int t) const { return moves[static_cast<std::size_t>(d) * cols + t]; }
};

/// One side of an aligned pair; gap sides carry the gap token ('A' on the
/// reference side, 'D' on the detected side) and quantity 0.
struct AlignedEntry {
    std::string type;
    int quantity = 0;
    bool is_gap = false;
};

struct AlignedPair {
    AlignedEntry ref;
    AlignedEntry det;
    PairLabel label = PairLabel::NM;
};

struct AlignmentOutcome {
    std::vector<AlignedPair> pairs;
    long mu_numerator = 0;
    long mu_denominator = 0;
    double mu = 0.0;
    ScoreMatrix score;
};

/// Substitution score: +q_t when the types correspond, -q_t otherwise.
/// EMPTY/UNKNOWN detected types never match a real reference type.
int substitution_score(const PlanogramEntry& det, const PlanogramEntry& ref);

/// Global alignment of the detected against the reference planogram with
/// dynamic gap penalties (the consumed entry's quantity) and unit-step
/// first row/column. Throws std::invalid_argument on an empty planogram.
AlignmentOutcome align(const Planogram& det, const Planogram& ref);

/// Planogram match ratio: sum of min(q_d, q_t) over type-matching pairs over
/// the total reference quantity. Throws std::invalid_argument when the
/// reference side holds no quantity.
double match_ratio(const std::vector<AlignedPair>& pairs);

/// Text table of an alignment: one row each for reference types/quantities,
/// detected types/quantities, and labels.
std::string render_alignment_table(const AlignmentOutcome& outcome);

void to_json(nlohmann::json& j, const AlignedPair& p);
void to_json(nlohmann::json& j, const AlignmentOutcome& o);

}  // namespace shelfalign
