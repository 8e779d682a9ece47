#pragma once

/// Domain types shared by all modules: tasks, candidates, execution outcomes,
/// clusters, oracle answers, and the selection report. Everything here is
/// immutable after construction and safe to share across threads.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pairsel/errors.hpp"
#include "pairsel/value.hpp"

namespace pairsel {

enum class IoMode { Function, Stdio };

struct Task {
    std::string id;
    std::string description; // natural-language docstring / problem statement
    std::optional<std::string> entry_point;
    IoMode io_mode = IoMode::Function;
    std::vector<std::string> params; // FUNCTION mode only, ordered

    void validate() const {
        if (description.empty())
            throw ConfigError("task '" + id + "': description is empty");
        if (io_mode == IoMode::Function) {
            if (!entry_point || entry_point->empty())
                throw ConfigError("task '" + id + "': FUNCTION mode requires an entry point");
            if (params.empty())
                throw ConfigError("task '" + id + "': FUNCTION mode requires parameter names");
        } else {
            if (entry_point || !params.empty())
                throw ConfigError("task '" + id +
                                  "': STDIO mode forbids entry point and parameters");
        }
    }
};

struct Candidate {
    std::string id;
    std::string source;
    std::optional<std::string> origin; // generator label
};

struct InputExample {
    std::vector<Value> args; // FUNCTION: one per param; STDIO: single Raw
};

inline bool input_equal(const InputExample& a, const InputExample& b) {
    if (a.args.size() != b.args.size())
        return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!(a.args[i] == b.args[i]))
            return false;
    return true;
}

enum class ExecStatus { Ok, Error, Timeout, Nondeterministic };

inline const char* to_string(ExecStatus s) {
    switch (s) {
    case ExecStatus::Ok: return "OK";
    case ExecStatus::Error: return "ERROR";
    case ExecStatus::Timeout: return "TIMEOUT";
    case ExecStatus::Nondeterministic: return "NONDETERMINISTIC";
    }
    return "?";
}

struct ExecutionOutcome {
    ExecStatus status = ExecStatus::Error;
    std::optional<Value> value;  // present iff status == Ok
    std::optional<std::string> detail;

    static ExecutionOutcome ok(Value v) { return {ExecStatus::Ok, std::move(v), std::nullopt}; }
    static ExecutionOutcome error(std::string why) {
        return {ExecStatus::Error, std::nullopt, std::move(why)};
    }
    static ExecutionOutcome timeout(std::string why) {
        return {ExecStatus::Timeout, std::nullopt, std::move(why)};
    }
};

// Equality used by clustering and diff validation: OK outcomes compare by
// value_equal, non-OK outcomes by status alone.
inline bool outcome_equal(const ExecutionOutcome& a, const ExecutionOutcome& b) {
    if (a.status != b.status)
        return false;
    if (a.status != ExecStatus::Ok)
        return true;
    return value_equal(*a.value, *b.value);
}

// Sentinel renderings are what non-OK entries look like inside prompts.
inline std::string render_outcome(const ExecutionOutcome& o) {
    switch (o.status) {
    case ExecStatus::Ok: return render(*o.value);
    case ExecStatus::Timeout: return "<TIMEOUT>";
    default: return "<ERROR>";
    }
}

struct OutputVector {
    std::vector<ExecutionOutcome> entries; // aligned index-wise with the input list
};

inline bool output_vector_equal(const OutputVector& a, const OutputVector& b) {
    if (a.entries.size() != b.entries.size())
        return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        if (!outcome_equal(a.entries[i], b.entries[i]))
            return false;
    return true;
}

struct Cluster {
    std::vector<std::string> members; // candidate ids, first-seen order
    OutputVector outputs;
};

enum class MembershipWinner { First, Second };

struct MembershipAnswer {
    MembershipWinner winner;
    std::string raw; // verbatim oracle reply
};

enum class EquivalenceVerdict { Equivalent, Diff, Unparseable };

struct EquivalenceAnswer {
    EquivalenceVerdict verdict = EquivalenceVerdict::Unparseable;
    std::optional<InputExample> diff_input; // present iff verdict == Diff
    std::string raw;

    static EquivalenceAnswer equivalent(std::string raw) {
        return {EquivalenceVerdict::Equivalent, std::nullopt, std::move(raw)};
    }
    static EquivalenceAnswer diff(InputExample x, std::string raw) {
        return {EquivalenceVerdict::Diff, std::move(x), std::move(raw)};
    }
    static EquivalenceAnswer unparseable(std::string raw) {
        return {EquivalenceVerdict::Unparseable, std::nullopt, std::move(raw)};
    }
};

inline const char* to_string(EquivalenceVerdict v) {
    switch (v) {
    case EquivalenceVerdict::Equivalent: return "EQUIVALENT";
    case EquivalenceVerdict::Diff: return "DIFF";
    case EquivalenceVerdict::Unparseable: return "UNPARSEABLE";
    }
    return "?";
}

// --- selection trace -------------------------------------------------------

struct PairComparisonRecord {
    std::size_t first_cluster = 0;
    std::size_t second_cluster = 0;
    bool oracle_called = false; // false => decided by the error-cluster policy
    bool unparseable = false;   // reply fell back to the unparseable policy
    std::size_t winner_cluster = 0;
};

struct EquivalenceQueryRecord {
    std::string first_id;
    std::string second_id;
    EquivalenceVerdict verdict = EquivalenceVerdict::Unparseable;
    std::optional<InputExample> diff_input;
    bool validated = false; // diff confirmed by executing both programs
};

struct IterationRecord {
    std::vector<Cluster> clusters;
    std::vector<std::vector<std::string>> rendered_outputs; // per cluster, per input
    std::vector<std::size_t> scores;
    std::size_t chosen_index = 0;
    std::vector<PairComparisonRecord> comparisons;
    std::vector<EquivalenceQueryRecord> equivalence;
    std::optional<InputExample> refined_input; // set when the iteration ended in Refine
};

struct TranscriptEntry {
    std::string kind; // "membership" | "equivalence" | "generate_inputs"
    std::string first_id;
    std::string second_id;
    std::string prompt; // rendered query text
    std::string reply;  // raw oracle reply
};

struct SelectionReport {
    std::string selected;
    std::size_t iterations = 0;
    std::size_t membership_queries = 0;
    std::size_t equivalence_queries = 0;
    std::vector<IterationRecord> trace;
    std::vector<TranscriptEntry> transcript;
};

} // namespace pairsel
