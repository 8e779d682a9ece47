#pragma once

/// The exact-learning selection loop: cluster candidates by output vectors,
/// pick a cluster by a Copeland tournament of pairwise membership queries,
/// then either accept it or refine on a validated differentiating input.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "pairsel/model.hpp"
#include "pairsel/oracle.hpp"
#include "pairsel/runner.hpp"

namespace pairsel {

struct EngineConfig {
    int max_unparseable_retries = 2;
    enum class OnUnparseableMembership { TreatAsFirst };
    OnUnparseableMembership on_unparseable_membership = OnUnparseableMembership::TreatAsFirst;
    enum class OnUnparseableEquivalence { TreatAsEquivalent };
    OnUnparseableEquivalence on_unparseable_equivalence =
        OnUnparseableEquivalence::TreatAsEquivalent;
    enum class ErrorClusterPolicy { AutoLose };
    ErrorClusterPolicy error_cluster_policy = ErrorClusterPolicy::AutoLose;

    void validate() const {
        if (max_unparseable_retries < 0)
            throw ConfigError("max_unparseable_retries must be >= 0");
    }
};

// Shared bookkeeping for one selection run; ops append to it when provided.
struct QueryLog {
    std::size_t membership_queries = 0;
    std::size_t equivalence_queries = 0;
    std::vector<TranscriptEntry> transcript;
    std::ostream* lines = nullptr; // structured one-line-per-query log, optional
    std::size_t iteration = 0;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline void log_query_line(QueryLog* log, const char* kind, const std::string& a,
                           const std::string& b, const std::string& prompt,
                           const std::string& verdict) {
    if (!log || !log->lines)
        return;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(prompt)));
    *log->lines << "query iter=" << log->iteration << " kind=" << kind << " pair=" << a << ":"
                << b << " prompt_fnv1a=" << hex << " verdict=" << verdict << "\n";
}

} // namespace detail

// Partitions candidates by output-vector equality. Cluster order and member
// order both preserve first-seen candidate order.
inline std::vector<Cluster> cluster(const std::vector<InputExample>& inputs,
                                    const std::vector<Candidate>& candidates, const Task& task,
                                    ProgramRunner& runner) {
    if (inputs.empty())
        throw ConfigError("cluster requires at least one input");
    if (candidates.empty())
        throw ConfigError("cluster requires at least one candidate");
    std::vector<Cluster> clusters;
    for (const auto& candidate : candidates) {
        OutputVector outputs;
        outputs.entries.reserve(inputs.size());
        for (const auto& input : inputs)
            outputs.entries.push_back(runner.execute(candidate, task, input));
        bool found = false;
        for (auto& c : clusters) {
            if (output_vector_equal(c.outputs, outputs)) {
                c.members.push_back(candidate.id);
                found = true;
                break;
            }
        }
        if (!found)
            clusters.push_back(Cluster{{candidate.id}, std::move(outputs)});
    }
    return clusters;
}

inline std::vector<std::string> rendered_outputs(const Cluster& c) {
    std::vector<std::string> out;
    out.reserve(c.outputs.entries.size());
    for (const auto& e : c.outputs.entries)
        out.push_back(render_outcome(e));
    return out;
}

struct TournamentResult {
    std::vector<std::size_t> scores;
    std::size_t winner_index = 0;
    std::vector<PairComparisonRecord> comparisons;
};

// Copeland's method over all unordered cluster pairs, one point per pair.
// A cluster whose outputs contain a non-OK entry auto-loses against a clean
// one without an oracle call; when both sides are dirty the oracle is still
// queried, with <ERROR>/<TIMEOUT> sentinels in place of values. Ties in the
// final argmax break toward the lowest cluster index.
inline TournamentResult copeland_tournament(const std::vector<Cluster>& clusters,
                                            const std::vector<InputExample>& inputs,
                                            const Task& task, Oracle& oracle,
                                            const EngineConfig& cfg, QueryLog* log = nullptr) {
    cfg.validate();
    if (clusters.empty())
        throw ConfigError("tournament requires at least one cluster");
    TournamentResult result;
    result.scores.assign(clusters.size(), 0);
    if (clusters.size() == 1)
        return result;

    std::vector<bool> dirty(clusters.size(), false);
    std::vector<std::vector<std::string>> rendered(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        rendered[i] = rendered_outputs(clusters[i]);
        for (const auto& e : clusters[i].outputs.entries)
            if (e.status != ExecStatus::Ok)
                dirty[i] = true;
    }

    for (std::size_t i = 0; i < clusters.size(); ++i) {
        for (std::size_t j = i + 1; j < clusters.size(); ++j) {
            PairComparisonRecord rec;
            rec.first_cluster = i;
            rec.second_cluster = j;
            if (dirty[i] != dirty[j]) {
                rec.oracle_called = false;
                rec.winner_cluster = dirty[i] ? j : i;
            } else {
                QueryContext ctx{clusters[i].members.front(), clusters[j].members.front()};
                MembershipReply reply =
                    oracle.membership(task, inputs, rendered[i], rendered[j], ctx);
                rec.oracle_called = true;
                if (log) {
                    ++log->membership_queries;
                    log->transcript.push_back({"membership", ctx.first_id, ctx.second_id,
                                               reply.prompt, reply.raw});
                }
                MembershipWinner winner;
                if (reply.winner) {
                    winner = *reply.winner;
                } else {
                    winner = MembershipWinner::First; // deterministic fallback
                    rec.unparseable = true;
                }
                rec.winner_cluster = winner == MembershipWinner::First ? i : j;
                detail::log_query_line(log, "membership", ctx.first_id, ctx.second_id,
                                       reply.prompt,
                                       winner == MembershipWinner::First ? "FIRST" : "SECOND");
            }
            ++result.scores[rec.winner_cluster];
            result.comparisons.push_back(rec);
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < clusters.size(); ++i)
        if (result.scores[i] > result.scores[best])
            best = i;
    result.winner_index = best;
    return result;
}

struct Accept {
    std::string candidate_id;
};
struct Refine {
    InputExample input;
};

struct RefineOutcome {
    std::variant<Accept, Refine> decision;
    std::vector<EquivalenceQueryRecord> queries;
};

namespace detail {

inline const Candidate& candidate_by_id(const std::vector<Candidate>& pool,
                                        const std::string& id) {
    for (const auto& c : pool)
        if (c.id == id)
            return c;
    throw ConfigError("unknown candidate id: " + id);
}

} // namespace detail

// Pairwise equivalence between the cluster head and every other member, in
// order. The first DIFF whose input actually separates the two programs under
// execution wins; everything else (EQUIVALENT, unparseable-after-retries,
// failed validation) falls through to Accept(head).
inline RefineOutcome refine_or_accept(const Cluster& selected,
                                      const std::vector<Candidate>& pool, const Task& task,
                                      Oracle& oracle, ProgramRunner& runner,
                                      const EngineConfig& cfg, QueryLog* log = nullptr) {
    cfg.validate();
    if (selected.members.empty())
        throw ConfigError("refine_or_accept requires a non-empty cluster");
    RefineOutcome outcome{Accept{selected.members.front()}, {}};
    const Candidate& head = detail::candidate_by_id(pool, selected.members.front());
    for (std::size_t i = 1; i < selected.members.size(); ++i) {
        const Candidate& other = detail::candidate_by_id(pool, selected.members[i]);
        QueryContext ctx{head.id, other.id};
        EquivalenceReply reply = oracle.equivalence(task, head.source, other.source, ctx);
        if (log) {
            ++log->equivalence_queries;
            log->transcript.push_back(
                {"equivalence", ctx.first_id, ctx.second_id, reply.prompt, reply.answer.raw});
        }
        EquivalenceQueryRecord rec;
        rec.first_id = head.id;
        rec.second_id = other.id;
        rec.verdict = reply.answer.verdict;
        rec.diff_input = reply.answer.diff_input;
        detail::log_query_line(log, "equivalence", ctx.first_id, ctx.second_id, reply.prompt,
                               to_string(reply.answer.verdict));
        if (reply.answer.verdict == EquivalenceVerdict::Diff) {
            const InputExample& x = *reply.answer.diff_input;
            ExecutionOutcome a = runner.execute(head, task, x);
            ExecutionOutcome b = runner.execute(other, task, x);
            if (!outcome_equal(a, b)) {
                rec.validated = true;
                outcome.queries.push_back(std::move(rec));
                outcome.decision = Refine{x};
                return outcome;
            }
        }
        // Unparseable verdicts map to EQUIVALENT here: continue scanning.
        outcome.queries.push_back(std::move(rec));
    }
    return outcome;
}

namespace detail {

inline std::size_t pairs_of(std::size_t n) { return n * (n - 1) / 2; }

} // namespace detail

// ExPairT-style selection: cluster, run the tournament, accept or re-cluster
// on the validated differentiating input (the input list is *replaced* by the
// singleton [x], not extended). Termination and per-type query bounds are
// asserted at runtime on the produced report.
inline SelectionReport select(const Task& task, const std::vector<InputExample>& inputs,
                              const std::vector<Candidate>& candidates, Oracle& oracle,
                              ProgramRunner& runner, const EngineConfig& cfg = {},
                              std::ostream* query_log_lines = nullptr) {
    task.validate();
    cfg.validate();
    if (candidates.empty())
        throw ConfigError("select requires at least one candidate");
    if (inputs.empty())
        throw ConfigError("select requires at least one input");

    QueryLog log;
    log.lines = query_log_lines;
    SelectionReport report;

    std::vector<Candidate> current = candidates;
    std::vector<InputExample> current_inputs = inputs;

    while (true) {
        log.iteration = ++report.iterations;
        if (report.iterations > candidates.size())
            throw std::logic_error("selection exceeded the |P| iteration bound; "
                                   "are the candidates deterministic?");

        IterationRecord record;
        record.clusters = cluster(current_inputs, current, task, runner);
        for (const auto& c : record.clusters)
            record.rendered_outputs.push_back(rendered_outputs(c));

        TournamentResult tr =
            copeland_tournament(record.clusters, current_inputs, task, oracle, cfg, &log);
        record.scores = tr.scores;
        record.chosen_index = tr.winner_index;
        record.comparisons = std::move(tr.comparisons);
        const Cluster selected = record.clusters[tr.winner_index];

        RefineOutcome ro = refine_or_accept(selected, current, task, oracle, runner, cfg, &log);
        record.equivalence = std::move(ro.queries);

        if (const Refine* refine = std::get_if<Refine>(&ro.decision)) {
            record.refined_input = refine->input;
            report.trace.push_back(std::move(record));
            current_inputs = {refine->input};
            std::vector<Candidate> next;
            for (const auto& id : selected.members)
                next.push_back(detail::candidate_by_id(current, id));
            current = std::move(next);
            continue;
        }
        report.trace.push_back(std::move(record));
        report.selected = std::get<Accept>(ro.decision).candidate_id;
        break;
    }

    report.membership_queries = log.membership_queries;
    report.equivalence_queries = log.equivalence_queries;
    report.transcript = std::move(log.transcript);

    const std::size_t bound = detail::pairs_of(candidates.size());
    if (report.iterations > candidates.size() || report.membership_queries > bound ||
        report.equivalence_queries > bound)
        throw std::logic_error("selection report violates the termination/query bounds");
    return report;
}

} // namespace pairsel
