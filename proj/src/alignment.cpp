#include "shelfalign/alignment.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace shelfalign {

namespace {

bool types_correspond(const PlanogramEntry& det, const PlanogramEntry& ref) {
    return det.kind == EntryKind::object && ref.kind == EntryKind::object &&
           det.group_type == ref.group_type;
}

PairLabel classify(const AlignedPair& p, bool corresponds) {
    if (p.ref.is_gap || p.det.is_gap || !corresponds) return PairLabel::NM;
    if (p.det.quantity == p.ref.quantity) return PairLabel::MT;
    return p.det.quantity < p.ref.quantity ? PairLabel::MI : PairLabel::ME;
}

}  // namespace

std::string to_string(PairLabel label) {
    switch (label) {
        case PairLabel::MT: return "MT";
        case PairLabel::MI: return "MI";
        case PairLabel::ME: return "ME";
        case PairLabel::NM: return "NM";
    }
    return "NM";
}

PairLabel pair_label_from_string(const std::string& s) {
    if (s == "MT") return PairLabel::MT;
    if (s == "MI") return PairLabel::MI;
    if (s == "ME") return PairLabel::ME;
    if (s == "NM") return PairLabel::NM;
    throw std::invalid_argument("unknown pair label '" + s + "'");
}

int substitution_score(const PlanogramEntry& det, const PlanogramEntry& ref) {
    return types_correspond(det, ref) ? ref.quantity : -ref.quantity;
}

AlignmentOutcome align(const Planogram& det, const Planogram& ref) {
    const int E = static_cast<int>(det.entries.size());
    const int T = static_cast<int>(ref.entries.size());
    if (E == 0 || T == 0) throw std::invalid_argument("cannot align an empty planogram");

    ScoreMatrix f;
    f.rows = E + 1;
    f.cols = T + 1;
    f.values.assign(static_cast<std::size_t>(f.rows) * f.cols, 0);
    f.moves.assign(f.values.size(), MoveDir::diag);

    auto set = [&f](int d, int t, int v, MoveDir m) {
        f.values[static_cast<std::size_t>(d) * f.cols + t] = v;
        f.moves[static_cast<std::size_t>(d) * f.cols + t] = m;
    };

    // First row and column step by one per cell regardless of quantities.
    for (int t = 1; t <= T; ++t) set(0, t, -t, MoveDir::left);
    for (int d = 1; d <= E; ++d) set(d, 0, -d, MoveDir::up);

    for (int d = 1; d <= E; ++d) {
        const PlanogramEntry& de = det.entries[d - 1];
        for (int t = 1; t <= T; ++t) {
            const PlanogramEntry& re = ref.entries[t - 1];
            int diag = f.at(d - 1, t - 1) + substitution_score(de, re);
            int up = f.at(d - 1, t) - de.quantity;    // insert: extra detected group
            int left = f.at(d, t - 1) - re.quantity;  // delete: undetected reference group
            int best = std::max({diag, up, left});
            MoveDir mv = MoveDir::diag;
            if (best != diag) mv = best == up ? MoveDir::up : MoveDir::left;
            set(d, t, best, mv);
        }
    }

    AlignmentOutcome out;
    out.score = f;

    int d = E, t = T;
    while (d > 0 || t > 0) {
        AlignedPair p;
        switch (f.move_at(d, t)) {
            case MoveDir::diag: {
                const PlanogramEntry& de = det.entries[d - 1];
                const PlanogramEntry& re = ref.entries[t - 1];
                p.det = {de.display_type(), de.quantity, false};
                p.ref = {re.display_type(), re.quantity, false};
                p.label = classify(p, types_correspond(de, re));
                --d;
                --t;
                break;
            }
            case MoveDir::up: {
                const PlanogramEntry& de = det.entries[d - 1];
                p.det = {de.display_type(), de.quantity, false};
                p.ref = {"A", 0, true};
                p.label = PairLabel::NM;
                --d;
                break;
            }
            case MoveDir::left: {
                const PlanogramEntry& re = ref.entries[t - 1];
                p.det = {"D", 0, true};
                p.ref = {re.display_type(), re.quantity, false};
                p.label = PairLabel::NM;
                --t;
                break;
            }
        }
        out.pairs.push_back(std::move(p));
    }
    std::reverse(out.pairs.begin(), out.pairs.end());

    for (const AlignedPair& p : out.pairs) {
        out.mu_denominator += p.ref.quantity;
        if (p.label != PairLabel::NM) {
            out.mu_numerator += std::min(p.det.quantity, p.ref.quantity);
        }
    }
    out.mu = out.mu_denominator == 0
                 ? 0.0
                 : static_cast<double>(out.mu_numerator) / static_cast<double>(out.mu_denominator);
    return out;
}

double match_ratio(const std::vector<AlignedPair>& pairs) {
    long num = 0, den = 0;
    for (const AlignedPair& p : pairs) {
        den += p.ref.quantity;
        if (p.label != PairLabel::NM) num += std::min(p.det.quantity, p.ref.quantity);
    }
    if (den == 0) throw std::invalid_argument("match ratio undefined: reference side is all gaps");
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string render_alignment_table(const AlignmentOutcome& outcome) {
    auto row = [&outcome](const std::string& head, auto cell) {
        std::ostringstream os;
        os << head;
        for (const AlignedPair& p : outcome.pairs) {
            std::ostringstream c;
            c << cell(p);
            os << ' ' << c.str();
            for (std::size_t i = c.str().size(); i < 4; ++i) os << ' ';
        }
        return os.str();
    };
    std::ostringstream os;
    os << row("o_t:", [](const AlignedPair& p) { return p.ref.type; }) << '\n'
       << row("q_t:", [](const AlignedPair& p) { return std::to_string(p.ref.quantity); }) << '\n'
       << row("o_d:", [](const AlignedPair& p) { return p.det.type; }) << '\n'
       << row("q_d:", [](const AlignedPair& p) { return std::to_string(p.det.quantity); }) << '\n'
       << row("res:", [](const AlignedPair& p) { return to_string(p.label); }) << '\n';
    return os.str();
}

void to_json(nlohmann::json& j, const AlignedPair& p) {
    j = nlohmann::json{
        {"ref", {{"type", p.ref.type}, {"quantity", p.ref.quantity}, {"gap", p.ref.is_gap}}},
        {"det", {{"type", p.det.type}, {"quantity", p.det.quantity}, {"gap", p.det.is_gap}}},
        {"label", to_string(p.label)}};
}

void to_json(nlohmann::json& j, const AlignmentOutcome& o) {
    j = nlohmann::json{{"pairs", o.pairs},
                       {"mu", o.mu},
                       {"mu_exact", {o.mu_numerator, o.mu_denominator}}};
}

}  // namespace shelfalign
