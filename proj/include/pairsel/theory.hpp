#pragma once

/// Robustness analysis of the selection loop: the closed-form tournament lower
/// bound and differentiating-input probability, Monte Carlo verification of
/// both, and the synthetic table-driven task generator that gives the
/// simulated oracle a decidable ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "pairsel/model.hpp"
#include "pairsel/oracle.hpp"
#include "pairsel/rng.hpp"
#include "pairsel/runner.hpp"

namespace pairsel {

// --- tournament bound (n incorrect clusters, one correct) -------------------

struct TournamentParams {
    int n = 2;      // number of incorrect clusters; total clusters n + 1
    double p = 0.9; // oracle accuracy against the correct cluster
    double j = 1.0; // free bound parameter, real-valued in [1, n-1]

    void validate() const {
        if (n < 2)
            throw DomainError("tournament bound requires n >= 2");
        if (!(p > 0.5) || p > 1.0)
            throw DomainError("tournament bound requires 0.5 < p <= 1");
        if (j < 1.0 || j > static_cast<double>(n - 1))
            throw DomainError("tournament bound requires 1 <= j <= n-1");
    }
};

// P(correct cluster holds the strictly maximal Copeland score) >=
//   [ sum_{k=ceil(j)+2}^{n} C(n,k) p^k q^(n-k) ]
//   * [ 1 - n (1/2)^(n-1) sum_{k=floor(j)+1}^{n-1} C(n-1,k) ],
// second factor clamped at 0 (the union bound can exceed 1). Empty sums are 0.
// Binomials are exact; products accumulate in extended precision.
inline double copeland_lower_bound(const TournamentParams& params) {
    params.validate();
    const int n = params.n;
    const long double p = params.p;
    const long double q = 1.0L - p;

    long double first = 0.0L;
    const int k_first = static_cast<int>(std::ceil(params.j)) + 2;
    for (int k = k_first; k <= n; ++k) {
        long double term = detail::binomial(n, k).convert_to<long double>();
        term *= std::pow(p, static_cast<long double>(k));
        term *= std::pow(q, static_cast<long double>(n - k));
        first += term;
    }

    BigInt tail = 0;
    const int k_second = static_cast<int>(std::floor(params.j)) + 1;
    for (int k = k_second; k <= n - 1; ++k)
        tail += detail::binomial(n - 1, k);
    long double second = 1.0L - static_cast<long double>(n) * tail.convert_to<long double>() /
                                    std::pow(2.0L, static_cast<long double>(n - 1));
    if (second < 0.0L)
        second = 0.0L;

    return static_cast<double>(first * second);
}

// Tightest reportable bound over the grid j in {1, 1.5, ..., n-1}.
inline double copeland_lower_bound_max_j(int n, double p) {
    double best = 0.0;
    for (int half = 2; half <= 2 * (n - 1); ++half) {
        TournamentParams params{n, p, half / 2.0};
        best = std::max(best, copeland_lower_bound(params));
    }
    return best;
}

// Simulates full Copeland rounds: the correct cluster wins each of its n
// comparisons independently with probability p; incorrect-vs-incorrect
// comparisons are fair coins. Event A requires the correct cluster's score to
// strictly exceed every other score; ties count as failure.
inline double simulate_tournament(int n, double p, std::size_t trials, std::uint64_t seed) {
    TournamentParams{n, p, 1.0}.validate();
    if (trials < 1)
        throw DomainError("trials must be >= 1");
    SplitMix64 rng = SplitMix64::derive(seed, 0);
    std::vector<int> score(static_cast<std::size_t>(n));
    std::size_t successes = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::fill(score.begin(), score.end(), 0);
        int correct_score = 0;
        for (int i = 0; i < n; ++i) {
            if (rng.bernoulli(p))
                ++correct_score;
            else
                ++score[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                ++score[static_cast<std::size_t>(rng.bernoulli(0.5) ? i : j)];
        int best_other = 0;
        for (int s : score)
            best_other = std::max(best_other, s);
        if (correct_score > best_other)
            ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(trials);
}

// --- differentiating-input probability ---------------------------------------

struct DiffParams {
    int cluster_size = 2;
    int d = 1;        // number of incorrect programs in the cluster
    double p = 0.5;   // diff rate, correct vs incorrect
    double p_prime = 0.5; // diff rate, incorrect vs incorrect

    void validate() const {
        if (cluster_size < 1)
            throw DomainError("cluster_size must be >= 1");
        if (d < 1 || d > cluster_size)
            throw DomainError("d must lie in [1, cluster_size]");
        if (p < 0 || p > 1 || p_prime < 0 || p_prime > 1)
            throw DomainError("probabilities must lie in [0, 1]");
    }
};

// P(any equivalence query on the cluster head returns a differentiating input)
//   = (1 - (1-p)^d) (|C*|-d)/|C*|
//   + (1 - (1-p)^(|C*|-d) (1-p')^(d-1)) d/|C*|.
inline double diff_probability(const DiffParams& params) {
    params.validate();
    const double s = params.cluster_size;
    const double d = params.d;
    const double q = 1.0 - params.p;
    const double q_prime = 1.0 - params.p_prime;
    const double head_correct = (1.0 - std::pow(q, d)) * ((s - d) / s);
    const double head_incorrect =
        (1.0 - std::pow(q, s - d) * std::pow(q_prime, d - 1)) * (d / s);
    return head_correct + head_incorrect;
}

// Monte Carlo of the head-vs-rest walk: permute the cluster uniformly, then
// each head comparison independently returns a diff with probability p
// (correct vs incorrect), p' (incorrect vs incorrect), or never (both
// correct). Success is any diff.
inline double simulate_diff_search(const DiffParams& params, std::size_t trials,
                                   std::uint64_t seed) {
    params.validate();
    if (trials < 1)
        throw DomainError("trials must be >= 1");
    SplitMix64 rng = SplitMix64::derive(seed, 1);
    const int s = params.cluster_size;
    const int d = params.d;
    std::size_t successes = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const bool head_correct = rng.below(static_cast<std::uint64_t>(s)) <
                                  static_cast<std::uint64_t>(s - d);
        bool found = false;
        if (head_correct) {
            for (int i = 0; i < d && !found; ++i)
                found = rng.bernoulli(params.p);
        } else {
            for (int i = 0; i < s - d && !found; ++i)
                found = rng.bernoulli(params.p);
            for (int i = 0; i < d - 1 && !found; ++i)
                found = rng.bernoulli(params.p_prime);
        }
        if (found)
            ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(trials);
}

// --- synthetic ground-truth tasks --------------------------------------------

// A task whose specification is a total function given by a table over a small
// integer domain. Candidate programs are the same table with random
// corruptions, emitted as runnable FUNCTION-mode sources, so ground-truth
// correctness and equivalence are decidable by table comparison.
struct SyntheticTask {
    Task task;
    std::vector<Candidate> candidates;
    std::vector<InputExample> domain;
    std::vector<long long> truth_table;
    std::vector<std::vector<long long>> candidate_tables; // aligned with candidates
};

namespace detail {

inline std::string table_source(const std::vector<long long>& table) {
    std::string s = "def f(x):\n    table = {";
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (i)
            s += ", ";
        s += std::to_string(i) + ": " + std::to_string(table[i]);
    }
    s += "}\n    return table[x]\n";
    return s;
}

} // namespace detail

// Candidate 0 is forced correct; every other candidate corrupts each table
// entry independently with probability error_rate (corruptions always change
// the value).
inline std::vector<SyntheticTask> generate_synthetic_suite(std::size_t num_tasks,
                                                           std::size_t domain_size,
                                                           std::size_t num_candidates,
                                                           double error_rate,
                                                           std::uint64_t seed) {
    if (num_candidates < 1)
        throw DomainError("num_candidates must be >= 1");
    if (domain_size < 1)
        throw DomainError("domain_size must be >= 1");
    if (error_rate < 0 || error_rate >= 1)
        throw DomainError("error_rate must lie in [0, 1)");

    constexpr long long value_range = 1000;
    std::vector<SyntheticTask> suite;
    for (std::size_t ti = 0; ti < num_tasks; ++ti) {
        SplitMix64 rng = SplitMix64::derive(seed, ti);
        SyntheticTask st;
        st.task.id = "synthetic-" + std::to_string(ti);
        st.task.description =
            "def f(x):\n    \"\"\"\n    Return the value of the fixed lookup function f at "
            "the integer key x, where 0 <= x < " +
            std::to_string(domain_size) + ".\n    \"\"\"";
        st.task.entry_point = "f";
        st.task.io_mode = IoMode::Function;
        st.task.params = {"x"};

        st.truth_table.resize(domain_size);
        for (auto& v : st.truth_table)
            v = static_cast<long long>(rng.below(value_range));
        for (std::size_t i = 0; i < domain_size; ++i)
            st.domain.push_back(InputExample{{Value::integer(static_cast<long long>(i))}});

        for (std::size_t ci = 0; ci < num_candidates; ++ci) {
            std::vector<long long> table = st.truth_table;
            if (ci > 0) {
                for (auto& v : table) {
                    if (rng.bernoulli(error_rate))
                        v = (v + 1 + static_cast<long long>(rng.below(value_range - 1))) %
                            value_range;
                }
            }
            Candidate c;
            c.id = "cand-" + std::to_string(ci);
            c.source = detail::table_source(table);
            st.candidates.push_back(std::move(c));
            st.candidate_tables.push_back(std::move(table));
        }
        suite.push_back(std::move(st));
    }
    return suite;
}

// Recovers the table from an emitted table-driven source, for rebuilding
// ground truth from files. Keys must be exactly 0..n-1.
inline std::optional<std::vector<long long>> parse_table_source(const std::string& source) {
    std::size_t open = source.find('{');
    std::size_t close = source.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        return std::nullopt;
    Value table;
    try {
        table = parse_value_literal(source.substr(open, close - open + 1));
    } catch (const ParseError&) {
        return std::nullopt;
    }
    if (table.kind() != ValueKind::Map)
        return std::nullopt;
    std::vector<long long> out(table.entries().size(), 0);
    std::vector<bool> seen(out.size(), false);
    for (const auto& e : table.entries()) {
        if (e.key.kind() != ValueKind::Int || e.value.kind() != ValueKind::Int)
            return std::nullopt;
        const BigInt& k = e.key.as_int();
        if (k < 0 || k >= static_cast<long long>(out.size()))
            return std::nullopt;
        std::size_t idx = k.convert_to<std::size_t>();
        if (seen[idx])
            return std::nullopt;
        seen[idx] = true;
        out[idx] = e.value.as_int().convert_to<long long>();
    }
    return out;
}

// Rebuilds the SyntheticTask view from persisted parts (task + candidates from
// a bundle, truth table + domain from its sidecar).
inline SyntheticTask synthetic_from_parts(Task task, std::vector<Candidate> candidates,
                                          std::vector<long long> truth_table,
                                          std::vector<InputExample> domain) {
    SyntheticTask st;
    st.task = std::move(task);
    st.domain = std::move(domain);
    st.truth_table = std::move(truth_table);
    for (auto& c : candidates) {
        auto table = parse_table_source(c.source);
        if (!table)
            throw ConfigError("candidate '" + c.id + "' is not a table-driven source");
        st.candidate_tables.push_back(std::move(*table));
        st.candidates.push_back(std::move(c));
    }
    return st;
}

// In-process runner for table-driven candidates: same observable behavior as
// executing the emitted sources under the subprocess runner, at desk-test
// speed. Out-of-domain keys error like Python's KeyError would.
class TableRunner : public ProgramRunner {
public:
    explicit TableRunner(const SyntheticTask& st) {
        for (std::size_t i = 0; i < st.candidates.size(); ++i)
            tables_[st.candidates[i].id] = st.candidate_tables[i];
    }

    ExecutionOutcome execute(const Candidate& candidate, const Task&,
                             const InputExample& input) override {
        auto it = tables_.find(candidate.id);
        if (it == tables_.end())
            throw ConfigError("TableRunner: unknown candidate " + candidate.id);
        const Value& arg = input.args.at(0);
        if (arg.kind() != ValueKind::Int)
            return ExecutionOutcome::error("exit code 1: TypeError");
        const BigInt& x = arg.as_int();
        if (x < 0 || x >= static_cast<long long>(it->second.size()))
            return ExecutionOutcome::error("exit code 1: KeyError");
        return ExecutionOutcome::ok(
            Value::integer(it->second[x.convert_to<std::size_t>()]));
    }

private:
    std::map<std::string, std::vector<long long>> tables_;
};

// Ground truth for the simulated oracle, backed by one synthetic task's
// tables. Differentiating inputs are real: the first domain point where the
// two tables differ.
class TableGroundTruth : public GroundTruth {
public:
    explicit TableGroundTruth(const SyntheticTask& st) : st_(st) {
        for (std::size_t i = 0; i < st.candidates.size(); ++i)
            by_source_[st.candidates[i].source] = i;
    }

    bool outputs_match_truth(const Task&, const std::vector<InputExample>& inputs,
                             const std::vector<std::string>& rendered) const override {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto truth = truth_value(inputs[i]);
            if (!truth || rendered.at(i) != render(*truth))
                return false;
        }
        return true;
    }

    bool source_correct(const Task&, const std::string& source) const override {
        return table_of(source) == st_.truth_table;
    }

    std::optional<InputExample> differentiating_input(const Task&, const std::string& source_a,
                                                      const std::string& source_b) const override {
        const auto& ta = table_of(source_a);
        const auto& tb = table_of(source_b);
        for (std::size_t i = 0; i < ta.size(); ++i)
            if (ta[i] != tb[i])
                return st_.domain[i];
        return std::nullopt;
    }

    std::vector<InputExample> sample_inputs(const Task&, std::size_t k) const override {
        std::vector<InputExample> out;
        for (std::size_t i = 0; i < st_.domain.size() && i < k; ++i)
            out.push_back(st_.domain[i]);
        return out;
    }

private:
    const SyntheticTask& st_;
    std::map<std::string, std::size_t> by_source_;

    const std::vector<long long>& table_of(const std::string& source) const {
        auto it = by_source_.find(source);
        if (it == by_source_.end())
            throw ConfigError("TableGroundTruth: unknown candidate source");
        return st_.candidate_tables[it->second];
    }

    std::optional<Value> truth_value(const InputExample& input) const {
        const Value& arg = input.args.at(0);
        if (arg.kind() != ValueKind::Int)
            return std::nullopt;
        const BigInt& x = arg.as_int();
        if (x < 0 || x >= static_cast<long long>(st_.truth_table.size()))
            return std::nullopt;
        return Value::integer(st_.truth_table[x.convert_to<std::size_t>()]);
    }
};

// --- curve emission -----------------------------------------------------------

struct TournamentCurvePoint {
    int n;
    double p;
};

struct DiffCurvePoint {
    int cluster_size;
    int d;
    double p;
    double p_prime;
};

namespace detail {

inline std::string format_sig6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace detail

// CSV: n,p,bound_max_over_j,empirical
inline void emit_tournament_curves(const std::vector<TournamentCurvePoint>& grid,
                                   std::size_t trials, std::uint64_t seed, std::ostream& out) {
    if (grid.empty())
        throw DomainError("curve grid must be non-empty");
    out << "n,p,bound_max_over_j,empirical\n";
    std::uint64_t row = 0;
    for (const auto& pt : grid) {
        double bound = copeland_lower_bound_max_j(pt.n, pt.p);
        double empirical = simulate_tournament(pt.n, pt.p, trials, seed + 0x100 * row++);
        out << pt.n << ',' << detail::format_sig6(pt.p) << ',' << detail::format_sig6(bound)
            << ',' << detail::format_sig6(empirical) << '\n';
    }
}

// CSV: cluster_size,d,p,p_prime,exact,empirical
inline void emit_diff_curves(const std::vector<DiffCurvePoint>& grid, std::size_t trials,
                             std::uint64_t seed, std::ostream& out) {
    if (grid.empty())
        throw DomainError("curve grid must be non-empty");
    out << "cluster_size,d,p,p_prime,exact,empirical\n";
    std::uint64_t row = 0;
    for (const auto& pt : grid) {
        DiffParams params{pt.cluster_size, pt.d, pt.p, pt.p_prime};
        double exact = diff_probability(params);
        double empirical = simulate_diff_search(params, trials, seed + 0x100 * row++);
        out << pt.cluster_size << ',' << pt.d << ',' << detail::format_sig6(pt.p) << ','
            << detail::format_sig6(pt.p_prime) << ',' << detail::format_sig6(exact) << ','
            << detail::format_sig6(empirical) << '\n';
    }
}

} // namespace pairsel
