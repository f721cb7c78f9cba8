#pragma once

// Propositional machinery over activation literals: leveled trail, clause
// database with two watched literals, unit propagation, theory-core clause
// learning, and second-highest-level backjumping. Conflicts here originate
// from theory cores, not resolution chains, so no implication-graph
// analysis is needed.

#include <cassert>
#include <cstdint>
#include <limits>
#include <vector>

#include "relucheck/literal.hpp"

namespace relucheck {

// Flattened hidden-neuron index space shared by trail and clause database.
struct HiddenSpace {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> widths;
    std::size_t count = 0;

    static HiddenSpace of(const Network& net) {
        HiddenSpace hs;
        for (std::size_t k = 0; k < net.hidden_layer_count(); ++k) {
            hs.offsets.push_back(hs.count);
            hs.widths.push_back(net.hidden_width(k));
            hs.count += net.hidden_width(k);
        }
        return hs;
    }

    std::size_t flat(NeuronId id) const { return offsets[id.layer] + id.index; }

    NeuronId neuron(std::size_t flat_index) const {
        std::size_t layer = 0;
        while (layer + 1 < offsets.size() && offsets[layer + 1] <= flat_index) ++layer;
        return NeuronId{layer, flat_index - offsets[layer]};
    }

    std::size_t code(const Literal& l) const { return 2 * flat(l.neuron) + (l.active ? 1 : 0); }
};

enum class ReasonKind : std::uint8_t { Decision, Propagated, TheoryImplied };

struct Reason {
    ReasonKind kind = ReasonKind::Decision;
    std::uint32_t clause_index = 0;  // valid for Propagated

    static Reason decision() { return {ReasonKind::Decision, 0}; }
    static Reason propagated(std::uint32_t idx) { return {ReasonKind::Propagated, idx}; }
    static Reason theory() { return {ReasonKind::TheoryImplied, 0}; }
};

enum class LitTruth : std::int8_t { Unassigned, True, False };

class Trail {
public:
    struct Entry {
        Literal lit;
        std::uint32_t level;
        Reason reason;
    };

    explicit Trail(HiddenSpace space) : space_(std::move(space)) {
        value_.assign(space_.count, 0);
        level_.assign(space_.count, 0);
    }

    const HiddenSpace& space() const { return space_; }
    std::uint32_t current_level() const { return current_level_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    bool assigned(NeuronId id) const { return value_[space_.flat(id)] != 0; }

    LitTruth value_of(const Literal& l) const {
        std::int8_t v = value_[space_.flat(l.neuron)];
        if (v == 0) return LitTruth::Unassigned;
        return (v > 0) == l.active ? LitTruth::True : LitTruth::False;
    }

    std::uint32_t level_of(const Literal& l) const { return level_[space_.flat(l.neuron)]; }

    void decide(const Literal& lit) {
        if (assigned(lit.neuron)) throw std::logic_error("decide: neuron already assigned");
        ++current_level_;
        push(lit, Reason::decision());
    }

    void assign(const Literal& lit, Reason reason) {
        if (assigned(lit.neuron)) throw std::logic_error("assign: neuron already assigned");
        push(lit, reason);
    }

    // Removes every entry above level k. Watches stay valid: a watched
    // literal only ever moves back toward Unassigned.
    void backtrack(std::uint32_t k) {
        if (k >= current_level_) throw std::logic_error("backtrack: level not below current");
        while (!entries_.empty() && entries_.back().level > k) {
            std::size_t v = space_.flat(entries_.back().lit.neuron);
            value_[v] = 0;
            level_[v] = 0;
            entries_.pop_back();
        }
        current_level_ = k;
        // Surviving entries past qhead_ still need their propagation pass.
        qhead_ = std::min(qhead_, entries_.size());
    }

    std::vector<Literal> decisions() const {
        std::vector<Literal> out;
        for (const auto& e : entries_)
            if (e.reason.kind == ReasonKind::Decision) out.push_back(e.lit);
        return out;
    }

    std::vector<Literal> fixed_literals() const {
        std::vector<Literal> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.lit);
        return out;
    }

    std::size_t qhead_ = 0;  // next unprocessed trail position for propagation

private:
    void push(const Literal& lit, Reason reason) {
        std::size_t v = space_.flat(lit.neuron);
        value_[v] = lit.active ? 1 : -1;
        level_[v] = current_level_;
        entries_.push_back(Entry{lit, current_level_, reason});
    }

    HiddenSpace space_;
    std::vector<Entry> entries_;
    std::vector<std::int8_t> value_;
    std::vector<std::uint32_t> level_;
    std::uint32_t current_level_ = 0;
};

class ClauseDB {
public:
    explicit ClauseDB(const HiddenSpace& space) : space_(space) { watches_.assign(2 * space.count, {}); }

    std::size_t size() const { return clauses_.size(); }
    const Clause& clause(std::uint32_t idx) const { return clauses_[idx]; }

    // Adds a clause; the caller is responsible for propagating any literal
    // this clause asserts under the current trail (unit_propagate will).
    std::uint32_t add(Clause clause, const Trail& trail) {
        clause.validate();
        std::uint32_t idx = static_cast<std::uint32_t>(clauses_.size());
        if (clause.literals.size() == 1) {
            units_.push_back(idx);
        } else {
            order_watches(clause, trail);
            watches_[space_.code(clause.literals[0])].push_back(idx);
            watches_[space_.code(clause.literals[1])].push_back(idx);
        }
        clauses_.push_back(std::move(clause));
        return idx;
    }

    struct PropResult {
        bool conflict = false;
        std::uint32_t conflict_clause = 0;
    };

    // Runs unit propagation to fixpoint, assigning forced literals at the
    // current level with a Propagated reason.
    PropResult propagate(Trail& trail) {
        while (true) {
            bool progressed = false;
            for (std::uint32_t idx : units_) {
                const Literal& lit = clauses_[idx].literals[0];
                switch (trail.value_of(lit)) {
                    case LitTruth::False: return {true, idx};
                    case LitTruth::Unassigned:
                        trail.assign(lit, Reason::propagated(idx));
                        progressed = true;
                        break;
                    case LitTruth::True: break;
                }
            }
            while (trail.qhead_ < trail.size()) {
                Literal assigned_lit = trail.entries()[trail.qhead_++].lit;
                progressed = true;
                Literal false_lit = assigned_lit.negated();
                auto& watch_list = watches_[space_.code(false_lit)];
                std::size_t keep = 0;
                for (std::size_t w = 0; w < watch_list.size(); ++w) {
                    std::uint32_t idx = watch_list[w];
                    Clause& c = clauses_[idx];
                    if (c.literals[0] == false_lit) std::swap(c.literals[0], c.literals[1]);
                    if (trail.value_of(c.literals[0]) == LitTruth::True) {
                        watch_list[keep++] = idx;
                        continue;
                    }
                    bool moved = false;
                    for (std::size_t j = 2; j < c.literals.size(); ++j) {
                        if (trail.value_of(c.literals[j]) != LitTruth::False) {
                            std::swap(c.literals[1], c.literals[j]);
                            watches_[space_.code(c.literals[1])].push_back(idx);
                            moved = true;
                            break;
                        }
                    }
                    if (moved) continue;
                    watch_list[keep++] = idx;
                    if (trail.value_of(c.literals[0]) == LitTruth::False) {
                        for (std::size_t rest = w + 1; rest < watch_list.size(); ++rest)
                            watch_list[keep++] = watch_list[rest];
                        watch_list.resize(keep);
                        return {true, idx};
                    }
                    trail.assign(c.literals[0], Reason::propagated(idx));
                }
                watch_list.resize(keep);
            }
            if (!progressed) return {};
        }
    }

    bool falsified(const Clause& c, const Trail& trail) const {
        for (const auto& l : c.literals)
            if (trail.value_of(l) != LitTruth::False) return false;
        return true;
    }

private:
    // Prefer unassigned/true literals as watches; otherwise watch the
    // highest-level false literals so backtracking wakes the clause up.
    void order_watches(Clause& c, const Trail& trail) {
        auto rank = [&](const Literal& l) {
            if (trail.value_of(l) != LitTruth::False) return std::numeric_limits<std::uint32_t>::max();
            return trail.level_of(l);
        };
        for (int slot = 0; slot < 2; ++slot) {
            std::size_t best = slot;
            for (std::size_t j = slot; j < c.literals.size(); ++j)
                if (rank(c.literals[j]) > rank(c.literals[best])) best = j;
            std::swap(c.literals[slot], c.literals[best]);
        }
    }

    HiddenSpace space_;
    std::vector<Clause> clauses_;
    std::vector<std::uint32_t> units_;
    std::vector<std::vector<std::uint32_t>> watches_;
};

struct InstallResult {
    enum class State { Ok, Asserting, Falsified };
    std::uint32_t index = 0;
    State state = State::Ok;
};

// Adds a clause and reconciles it with the current trail: an asserting
// clause propagates its open literal immediately, a falsified one is
// reported so the caller can run a conflict cycle. Unit clauses are left to
// the next unit_propagate pass, which rescans them every call.
inline InstallResult install_clause(ClauseDB& db, Trail& trail, Clause clause) {
    std::uint32_t idx = db.add(std::move(clause), trail);
    const Clause& stored = db.clause(idx);
    if (stored.literals.size() == 1) return {idx, InstallResult::State::Ok};
    std::size_t non_false = 0;
    const Literal* open = nullptr;
    for (const Literal& l : stored.literals) {
        if (trail.value_of(l) == LitTruth::True) return {idx, InstallResult::State::Ok};
        if (trail.value_of(l) != LitTruth::False) {
            ++non_false;
            open = &l;
        }
    }
    if (non_false == 0) return {idx, InstallResult::State::Falsified};
    if (non_false == 1) {
        trail.assign(*open, Reason::propagated(idx));
        return {idx, InstallResult::State::Asserting};
    }
    return {idx, InstallResult::State::Ok};
}

// The conflict core (a conjunction shown infeasible) becomes a disjunctive
// learned clause of the negated core literals.
inline Clause learn_from_core(const std::vector<Literal>& core, const Trail& trail, ClauseOrigin origin) {
    if (core.empty()) throw std::invalid_argument("cannot learn from an empty core");
    Clause c;
    c.origin = origin;
    for (const Literal& l : core) {
        if (trail.value_of(l) != LitTruth::True) throw std::logic_error("core literal not assigned true on trail");
        c.literals.push_back(l.negated());
    }
    c.validate();
    return c;
}

struct BackjumpResult {
    bool refuted = false;  // falsified entirely at level 0: problem is UNSAT
    std::uint32_t level = 0;
};

// Second-highest distinct decision level among the clause's literals; 0 for
// unit clauses. Refuted when every literal is false at level 0.
inline BackjumpResult backjump_level(const Clause& clause, const Trail& trail) {
    std::uint32_t highest = 0, second = 0;
    for (const Literal& l : clause.literals) {
        if (trail.value_of(l) != LitTruth::False) throw std::logic_error("backjump_level: clause not falsified");
        std::uint32_t lv = trail.level_of(l);
        if (lv > highest) {
            second = highest;
            highest = lv;
        } else if (lv < highest && lv > second) {
            second = lv;
        }
    }
    if (highest == 0) return {true, 0};
    return {false, second};
}

}  // namespace relucheck
