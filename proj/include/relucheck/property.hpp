#pragma once

// Verification problems: input boxes, unsafe-region constraints, property
// file parsing, robustness instance generation, counterexample validation.

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "relucheck/network.hpp"

namespace relucheck {

struct Box {
    Vec lower;
    Vec upper;

    std::size_t dim() const { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size()) throw std::invalid_argument("box bound lengths differ");
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw std::invalid_argument("box bounds must be finite");
            if (lower[i] > upper[i])
                throw std::invalid_argument("inconsistent bounds for dimension " + std::to_string(i));
        }
    }

    bool contains(const Vec& x) const {
        if (x.size() != lower.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lower[i] || x[i] > upper[i]) return false;
        return true;
    }

    Vec clamp(Vec x) const {
        for (std::size_t i = 0; i < x.size() && i < lower.size(); ++i)
            x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
        return x;
    }

    Vec center() const {
        Vec c(lower.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
        return c;
    }
};

enum class Relation { LessEq, GreaterEq };
enum class VarSpace { Inputs, Outputs };

// One linear atom `coeffs . v REL bound` over the named variable space.
struct LinearConstraint {
    Vec coeffs;
    Relation relation = Relation::LessEq;
    double bound = 0.0;
    VarSpace space = VarSpace::Outputs;

    void validate() const {
        bool any = false;
        for (double c : coeffs) {
            if (!std::isfinite(c)) throw std::invalid_argument("constraint coefficient not finite");
            if (c != 0.0) any = true;
        }
        if (!any) throw std::invalid_argument("constraint needs a nonzero coefficient");
        if (!std::isfinite(bound)) throw std::invalid_argument("constraint bound not finite");
    }

    // Satisfaction margin: nonnegative iff the constraint holds at v.
    double slack(const Vec& v) const {
        double lhs = dot(coeffs, v);
        return relation == Relation::LessEq ? bound - lhs : lhs - bound;
    }
};

// The unsafe set is a conjunction of output constraints; verdict UNSAT over
// every point of the box means the property holds.
struct VerificationProblem {
    std::shared_ptr<const Network> network;
    Box input_box;
    std::vector<LinearConstraint> unsafe;

    void validate() const {
        if (!network) throw std::invalid_argument("problem has no network");
        input_box.validate();
        if (input_box.dim() != network->input_dim())
            throw std::invalid_argument("input box dimension differs from network input");
        if (unsafe.empty()) throw std::invalid_argument("unsafe region needs at least one constraint");
        for (const auto& c : unsafe) {
            c.validate();
            if (c.space != VarSpace::Outputs || c.coeffs.size() != network->output_dim())
                throw std::invalid_argument("unsafe constraint must range over network outputs");
        }
    }
};

struct Counterexample {
    Vec x;
    Vec y;
    ActivationPattern pattern;
};

struct CheckResult {
    bool valid = false;
    std::string reason;  // set when rejected
    Counterexample cex;  // set when valid
};

// LP-derived candidates carry solver round-off; accept slack down to -1e-9.
inline constexpr double kCounterexampleSlackTol = 1e-9;

// Box membership is exact; unsafe constraints allow kCounterexampleSlackTol.
inline CheckResult check_counterexample(const VerificationProblem& problem, const Vec& x) {
    if (x.size() != problem.network->input_dim())
        throw std::invalid_argument("candidate dimension mismatch");
    CheckResult res;
    if (!problem.input_box.contains(x)) {
        res.reason = "box";
        return res;
    }
    auto [y, pattern] = problem.network->evaluate_with_pattern(x);
    for (std::size_t i = 0; i < problem.unsafe.size(); ++i) {
        if (problem.unsafe[i].slack(y) < -kCounterexampleSlackTol) {
            res.reason = "constraint " + std::to_string(i);
            return res;
        }
    }
    res.valid = true;
    res.cex = Counterexample{x, std::move(y), std::move(pattern)};
    return res;
}

class PropertyParseError : public std::runtime_error {
public:
    PropertyParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " at line " + std::to_string(line)) {}
};

// Result of parsing a property file: sparse box tightenings plus the unsafe
// output constraints. Unspecified input dimensions later default to the
// NNet normalization mins/maxes.
struct ParsedProperty {
    std::map<std::size_t, double> input_lower;
    std::map<std::size_t, double> input_upper;
    std::vector<LinearConstraint> unsafe;
};

namespace detail {

struct Term {
    double coeff;
    bool is_input;
    std::size_t index;
};

// Grammar per line: `<term> (+|-) <term> ... (<=|>=) <const>` with
// term = [real '*'] variable, variable in {x<i>, y<j>}; '#' starts a comment.
inline bool parse_constraint_line(const std::string& line, std::size_t line_no, std::vector<Term>& terms,
                                  Relation& rel, double& bound) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    };
    auto peek = [&]() -> char { return pos < line.size() ? line[pos] : '\0'; };

    skip_ws();
    if (pos >= line.size() || line[pos] == '#') return false;  // blank or comment

    auto parse_number = [&](double& out) {
        skip_ws();
        std::size_t used = 0;
        try {
            out = std::stod(line.substr(pos), &used);
        } catch (const std::exception&) {
            throw PropertyParseError("expected a number", line_no);
        }
        pos += used;
        return true;
    };

    terms.clear();
    double sign = 1.0;
    skip_ws();
    if (peek() == '-') { sign = -1.0; ++pos; }
    else if (peek() == '+') ++pos;

    while (true) {
        skip_ws();
        double coeff = 1.0;
        char c = peek();
        if (c != 'x' && c != 'y') {
            parse_number(coeff);
            skip_ws();
            if (peek() == '*') { ++pos; skip_ws(); }
        }
        c = peek();
        if (c != 'x' && c != 'y')
            throw PropertyParseError("expected variable x<i> or y<j>", line_no);
        bool is_input = c == 'x';
        ++pos;
        std::size_t start = pos;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos == start) throw PropertyParseError("variable needs an index", line_no);
        std::size_t index = std::stoul(line.substr(start, pos - start));
        terms.push_back(Term{sign * coeff, is_input, index});

        skip_ws();
        c = peek();
        if (c == '+') { sign = 1.0; ++pos; continue; }
        if (c == '-') { sign = -1.0; ++pos; continue; }
        break;
    }

    skip_ws();
    if (peek() == '<' || peek() == '>') {
        char c = line[pos++];
        if (peek() != '=') throw PropertyParseError("expected <= or >=", line_no);
        ++pos;
        rel = c == '<' ? Relation::LessEq : Relation::GreaterEq;
    } else {
        throw PropertyParseError("expected <= or >=", line_no);
    }
    parse_number(bound);
    skip_ws();
    if (pos < line.size() && line[pos] != '#')
        throw PropertyParseError("trailing characters after constraint", line_no);
    return true;
}

}  // namespace detail

// Parses the property grammar. Input-variable lines must tighten a single
// input (they become box updates); output-variable lines become unsafe atoms.
inline ParsedProperty parse_property(std::istream& in) {
    ParsedProperty prop;
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_output = 0;
    struct OutputLine {
        std::vector<detail::Term> terms;
        Relation rel;
        double bound;
        std::size_t line_no;
    };
    std::vector<OutputLine> output_lines;

    while (std::getline(in, line)) {
        ++line_no;
        std::vector<detail::Term> terms;
        Relation rel;
        double bound;
        if (!detail::parse_constraint_line(line, line_no, terms, rel, bound)) continue;

        bool has_input = false, has_output = false;
        for (const auto& t : terms) (t.is_input ? has_input : has_output) = true;
        if (has_input && has_output)
            throw PropertyParseError("constraint mixes input and output variables", line_no);

        if (has_input) {
            if (terms.size() != 1)
                throw PropertyParseError("input constraints must involve a single variable", line_no);
            const auto& t = terms.front();
            if (t.coeff == 0.0) throw PropertyParseError("zero coefficient on input variable", line_no);
            double limit = bound / t.coeff;
            Relation eff = rel;
            if (t.coeff < 0.0) eff = rel == Relation::LessEq ? Relation::GreaterEq : Relation::LessEq;
            if (eff == Relation::LessEq) {
                auto it = prop.input_upper.find(t.index);
                if (it == prop.input_upper.end() || limit < it->second) prop.input_upper[t.index] = limit;
            } else {
                auto it = prop.input_lower.find(t.index);
                if (it == prop.input_lower.end() || limit > it->second) prop.input_lower[t.index] = limit;
            }
            auto lo = prop.input_lower.find(t.index);
            auto hi = prop.input_upper.find(t.index);
            if (lo != prop.input_lower.end() && hi != prop.input_upper.end() && lo->second > hi->second)
                throw PropertyParseError("inconsistent bounds for x" + std::to_string(t.index), line_no);
        } else {
            for (const auto& t : terms) max_output = std::max(max_output, t.index);
            output_lines.push_back({terms, rel, bound, line_no});
        }
    }

    for (const auto& ol : output_lines) {
        LinearConstraint c;
        c.space = VarSpace::Outputs;
        c.coeffs.assign(max_output + 1, 0.0);
        for (const auto& t : ol.terms) c.coeffs[t.index] += t.coeff;
        c.relation = ol.rel;
        c.bound = ol.bound;
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw PropertyParseError(e.what(), ol.line_no);
        }
        prop.unsafe.push_back(std::move(c));
    }
    return prop;
}

inline ParsedProperty parse_property(const std::string& text) {
    std::istringstream in(text);
    return parse_property(in);
}

// Combine a network and a parsed property into a runnable problem.
// Dimensions the property leaves open default to the NNet mins/maxes.
inline VerificationProblem make_problem(std::shared_ptr<const Network> net, const ParsedProperty& prop) {
    VerificationProblem problem;
    problem.network = net;
    const auto& norm = net->normalization();
    Box box;
    box.lower.assign(net->input_dim(), -1e9);
    box.upper.assign(net->input_dim(), 1e9);
    for (std::size_t i = 0; i < net->input_dim(); ++i) {
        if (i < norm.input_min.size()) box.lower[i] = norm.input_min[i];
        if (i < norm.input_max.size()) box.upper[i] = norm.input_max[i];
    }
    for (const auto& [i, v] : prop.input_lower) {
        if (i >= net->input_dim()) throw std::invalid_argument("unknown variable x" + std::to_string(i));
        box.lower[i] = std::max(box.lower[i], v);
    }
    for (const auto& [i, v] : prop.input_upper) {
        if (i >= net->input_dim()) throw std::invalid_argument("unknown variable x" + std::to_string(i));
        box.upper[i] = std::min(box.upper[i], v);
    }
    for (std::size_t i = 0; i < net->input_dim(); ++i)
        if (box.lower[i] > box.upper[i])
            throw std::invalid_argument("inconsistent bounds for x" + std::to_string(i));
    problem.input_box = std::move(box);

    for (LinearConstraint c : prop.unsafe) {
        if (c.coeffs.size() > net->output_dim())
            throw std::invalid_argument("unknown variable y" + std::to_string(c.coeffs.size() - 1));
        c.coeffs.resize(net->output_dim(), 0.0);
        problem.unsafe.push_back(std::move(c));
    }
    problem.validate();
    return problem;
}

// Targeted-misclassification robustness instances: one problem per target
// label t, unsafe = { y_t - y_true >= 0 }, box clamped to [0,1] per pixel.
inline std::vector<VerificationProblem> make_robustness_problems(std::shared_ptr<const Network> net, const Vec& x0,
                                                                 double eps, std::size_t true_label) {
    if (x0.size() != net->input_dim()) throw std::invalid_argument("x0 dimension mismatch");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (true_label >= net->output_dim()) throw std::invalid_argument("label out of range");
    Box box;
    box.lower.resize(x0.size());
    box.upper.resize(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        box.lower[i] = std::max(0.0, x0[i] - eps);
        box.upper[i] = std::min(1.0, x0[i] + eps);
    }
    std::vector<VerificationProblem> problems;
    for (std::size_t t = 0; t < net->output_dim(); ++t) {
        if (t == true_label) continue;
        VerificationProblem p;
        p.network = net;
        p.input_box = box;
        LinearConstraint c;
        c.space = VarSpace::Outputs;
        c.coeffs.assign(net->output_dim(), 0.0);
        c.coeffs[t] = 1.0;
        c.coeffs[true_label] = -1.0;
        c.relation = Relation::GreaterEq;
        c.bound = 0.0;
        p.unsafe.push_back(std::move(c));
        p.validate();
        problems.push_back(std::move(p));
    }
    return problems;
}

}  // namespace relucheck
