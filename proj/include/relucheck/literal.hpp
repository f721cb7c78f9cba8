#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relucheck/network.hpp"

namespace relucheck {

// Activation-phase proposition: `active` asserts the neuron's identity branch.
struct Literal {
    NeuronId neuron;
    bool active = true;

    Literal negated() const { return Literal{neuron, !active}; }

    friend bool operator==(const Literal& a, const Literal& b) {
        return a.neuron == b.neuron && a.active == b.active;
    }
    friend bool operator<(const Literal& a, const Literal& b) {
        if (!(a.neuron == b.neuron)) return a.neuron < b.neuron;
        return a.active < b.active;
    }
};

inline std::string to_string(const Literal& l) {
    return "L" + std::to_string(l.neuron.layer) + "_" + std::to_string(l.neuron.index) + (l.active ? "+" : "-");
}

enum class ClauseOrigin : std::uint8_t { PathNegation, BoundImplied, ElasticCore, InputSplit };

inline const char* to_string(ClauseOrigin o) {
    switch (o) {
        case ClauseOrigin::PathNegation: return "path_negation";
        case ClauseOrigin::BoundImplied: return "bound_implied";
        case ClauseOrigin::ElasticCore: return "elastic_core";
        case ClauseOrigin::InputSplit: return "input_split";
    }
    return "?";
}

// Learned disjunction. `scope` restricts the clause to one input-split
// region; clauses derived under a tightened box are only sound there.
struct Clause {
    std::vector<Literal> literals;
    std::uint64_t id = 0;
    ClauseOrigin origin = ClauseOrigin::PathNegation;
    std::optional<std::uint32_t> scope;

    void validate() const {
        if (literals.empty()) throw std::invalid_argument("clause must be non-empty");
        for (std::size_t i = 0; i < literals.size(); ++i)
            for (std::size_t j = i + 1; j < literals.size(); ++j)
                if (literals[i].neuron == literals[j].neuron)
                    throw std::invalid_argument("clause repeats a neuron");
    }
};

}  // namespace relucheck
