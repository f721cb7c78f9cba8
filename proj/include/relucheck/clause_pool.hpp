#pragma once

// Shared, sequence-numbered conflict-clause pool and timestamped UNSAT-path
// queue connecting solver workers to conflict analyzers. publish/submit/
// fetch/take are individually atomic and linearizable; a fetch never misses
// a clause published before it began.

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <vector>

#include "relucheck/literal.hpp"

namespace relucheck {

struct UnsatPath {
    std::vector<Literal> literals;  // trail order
    std::uint64_t timestamp = 0;
    std::uint32_t subproblem_id = 0;
};

class ClausePool {
public:
    struct PublishResult {
        bool added = false;
        std::uint64_t seq = 0;
    };

    // Appends with the next sequence id unless an identical literal set
    // (within the same scope) already exists.
    PublishResult publish(Clause clause) {
        clause.validate();
        Key key = make_key(clause);
        std::lock_guard<std::mutex> lock(mu_);
        auto it = dedup_.find(key);
        if (it != dedup_.end()) return {false, it->second};
        clause.id = next_seq_++;
        dedup_.emplace(std::move(key), clause.id);
        clauses_.push_back(std::move(clause));
        return {true, clauses_.back().id};
    }

    // All clauses with id > seq, in id order.
    std::vector<Clause> fetch_since(std::uint64_t seq) const {
        std::lock_guard<std::mutex> lock(mu_);
        std::vector<Clause> out;
        if (seq < clauses_.size()) out.assign(clauses_.begin() + static_cast<std::ptrdiff_t>(seq), clauses_.end());
        return out;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return clauses_.size();
    }

    std::vector<Clause> snapshot() const { return fetch_since(0); }

    void dump(std::ostream& out) const;

private:
    using Key = std::pair<std::int64_t, std::vector<std::uint64_t>>;

    static Key make_key(const Clause& c) {
        std::vector<std::uint64_t> lits;
        lits.reserve(c.literals.size());
        for (const Literal& l : c.literals)
            lits.push_back((static_cast<std::uint64_t>(l.neuron.layer) << 33) |
                           (static_cast<std::uint64_t>(l.neuron.index) << 1) | (l.active ? 1u : 0u));
        std::sort(lits.begin(), lits.end());
        return {c.scope ? static_cast<std::int64_t>(*c.scope) : -1, std::move(lits)};
    }

    mutable std::mutex mu_;
    std::vector<Clause> clauses_;  // ids are dense 1..size, so index = id-1
    std::map<Key, std::uint64_t> dedup_;
    std::uint64_t next_seq_ = 1;
};

// Bounded LIFO of unsatisfiable paths. Analyzers only ever care about the
// latest path, so overflow evicts the oldest timestamp.
class PathPool {
public:
    explicit PathPool(std::size_t capacity = 64) : capacity_(capacity) {}

    std::uint64_t submit(std::vector<Literal> literals, std::uint32_t subproblem_id) {
        if (literals.empty()) throw std::invalid_argument("cannot submit an empty path");
        std::lock_guard<std::mutex> lock(mu_);
        UnsatPath p;
        p.literals = std::move(literals);
        p.timestamp = next_ts_++;
        p.subproblem_id = subproblem_id;
        paths_.push_back(std::move(p));
        if (paths_.size() > capacity_) paths_.pop_front();
        cv_.notify_one();
        return paths_.back().timestamp;
    }

    std::optional<UnsatPath> take_latest() {
        std::lock_guard<std::mutex> lock(mu_);
        return take_locked();
    }

    // Blocks until a path arrives or shutdown is requested; a shutdown
    // leaves pending paths untouched.
    std::optional<UnsatPath> wait_take_latest() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return !paths_.empty() || shutdown_; });
        if (shutdown_) return std::nullopt;
        return take_locked();
    }

    void request_shutdown() {
        std::lock_guard<std::mutex> lock(mu_);
        shutdown_ = true;
        cv_.notify_all();
    }

    bool shutdown_requested() const {
        std::lock_guard<std::mutex> lock(mu_);
        return shutdown_;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return paths_.size();
    }

private:
    std::optional<UnsatPath> take_locked() {
        if (paths_.empty()) return std::nullopt;
        UnsatPath p = std::move(paths_.back());
        paths_.pop_back();
        return p;
    }

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<UnsatPath> paths_;
    std::size_t capacity_;
    std::uint64_t next_ts_ = 1;
    bool shutdown_ = false;
};

// Audit dump: `<seq> <origin> [scope] literals...`, one clause per line.
inline void dump_clauses(const std::vector<Clause>& clauses, std::ostream& out) {
    for (const Clause& c : clauses) {
        out << c.id << " " << to_string(c.origin);
        if (c.scope) out << " scope=" << *c.scope;
        for (const Literal& l : c.literals) out << " " << to_string(l);
        out << "\n";
    }
}

inline void ClausePool::dump(std::ostream& out) const { dump_clauses(snapshot(), out); }

}  // namespace relucheck
