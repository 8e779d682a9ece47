#pragma once

/// Evaluation kit: pass@1 with the all-pass/none-pass exclusion rule,
/// McNemar's significance test, task classification against hidden tests,
/// and the batch runner that drives selection and persists reports.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pairsel/engine.hpp"
#include "pairsel/json_io.hpp"

namespace pairsel {

enum class ExclusionReason { AllPass, NonePass };

inline const char* to_string(ExclusionReason r) {
    return r == ExclusionReason::AllPass ? "ALL_PASS" : "NONE_PASS";
}

struct TaskResult {
    std::string task_id;
    std::string selected_id; // empty when excluded or failed before selection
    bool correct = false;
    std::optional<ExclusionReason> excluded;
    std::optional<std::string> failure; // infrastructure failure, scored incorrect
};

struct EvalResult {
    std::vector<TaskResult> per_task;
    double pass_at_1 = 0.0;
    std::size_t membership_total = 0;
    std::size_t equivalence_total = 0;
};

// Eq.-1 style score: 100 * correct / non-excluded.
inline double score_pass_at_1(const std::vector<TaskResult>& results) {
    std::size_t considered = 0, correct = 0;
    for (const auto& r : results) {
        if (r.excluded)
            continue;
        ++considered;
        if (r.correct)
            ++correct;
    }
    if (considered == 0)
        throw EvalError("pass@1 undefined: every task is excluded");
    return 100.0 * static_cast<double>(correct) / static_cast<double>(considered);
}

struct McNemarResult {
    double statistic; // NaN in exact mode
    double p_value;
    bool exact;
};

// Discordant-pair test: continuity-corrected chi-square for b+c >= 25, exact
// two-sided binomial below that.
inline McNemarResult mcnemar(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0)
        throw EvalError("McNemar test undefined for b + c == 0");
    if (n >= 25) {
        const double diff = std::fabs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
        const double statistic = diff * diff / static_cast<double>(n);
        // chi-square(1) upper tail
        const double p_value = std::erfc(std::sqrt(statistic / 2.0));
        return {statistic, p_value, false};
    }
    const std::size_t hi = std::max(b, c);
    BigInt tail = 0;
    for (std::size_t k = hi; k <= n; ++k)
        tail += detail::binomial(static_cast<int>(n), static_cast<int>(k));
    BigInt denom = BigInt(1) << n;
    double p_value = 2.0 * tail.convert_to<double>() / denom.convert_to<double>();
    if (p_value > 1.0)
        p_value = 1.0;
    return {std::numeric_limits<double>::quiet_NaN(), p_value, true};
}

namespace detail {

inline bool passes_all_hidden(const Candidate& candidate, const TaskBundle& bundle,
                              ProgramRunner& runner) {
    for (const auto& test : bundle.hidden_tests) {
        ExecutionOutcome out = runner.execute(candidate, bundle.task, test.input);
        if (out.status != ExecStatus::Ok || !value_equal(*out.value, test.expected))
            return false;
    }
    return true;
}

} // namespace detail

// ALL_PASS if every candidate passes every hidden test, NONE_PASS if no
// candidate passes all of them; otherwise the task stays in.
inline std::optional<ExclusionReason> classify_task(const TaskBundle& bundle,
                                                    ProgramRunner& runner) {
    if (bundle.hidden_tests.empty())
        throw ConfigError("classify_task requires hidden tests");
    std::size_t passing = 0;
    for (const auto& c : bundle.candidates)
        if (detail::passes_all_hidden(c, bundle, runner))
            ++passing;
    if (passing == bundle.candidates.size())
        return ExclusionReason::AllPass;
    if (passing == 0)
        return ExclusionReason::NonePass;
    return std::nullopt;
}

inline Json eval_result_to_json(const EvalResult& r) {
    Json j;
    j["pass_at_1"] = r.pass_at_1;
    j["counts"] =
        Json{{"membership", r.membership_total}, {"equivalence", r.equivalence_total}};
    j["per_task"] = Json::array();
    for (const auto& t : r.per_task) {
        Json tj{{"task_id", t.task_id}, {"correct", t.correct}};
        if (!t.selected_id.empty())
            tj["selected_id"] = t.selected_id;
        if (t.excluded)
            tj["excluded"] = to_string(*t.excluded);
        if (t.failure)
            tj["failure"] = *t.failure;
        j["per_task"].push_back(std::move(tj));
    }
    return j;
}

struct SingleEvalOutcome {
    TaskResult result;
    std::size_t membership_queries = 0;
    std::size_t equivalence_queries = 0;
};

// Classifies, selects, and scores one bundle. Infrastructure failures are
// recorded on the result (scored incorrect), never thrown. The engine sees
// only the projection: task, initial inputs, candidates; hidden tests stay on
// this side of the fence.
inline SingleEvalOutcome eval_one(const TaskBundle& bundle, const EngineConfig& cfg,
                                  Oracle& oracle, ProgramRunner& runner,
                                  const std::string& out_dir = "") {
    namespace fs = std::filesystem;
    SingleEvalOutcome out;
    out.result.task_id = bundle.task.id;
    try {
        out.result.excluded = classify_task(bundle, runner);
        if (!out.result.excluded) {
            std::vector<InputExample> inputs = bundle.initial_inputs;
            if (inputs.empty())
                inputs = oracle.generate_inputs(bundle.task, 5);
            SelectionReport report =
                select(bundle.task, inputs, bundle.candidates, oracle, runner, cfg);
            out.membership_queries = report.membership_queries;
            out.equivalence_queries = report.equivalence_queries;
            out.result.selected_id = report.selected;
            out.result.correct = detail::passes_all_hidden(
                detail::candidate_by_id(bundle.candidates, report.selected), bundle, runner);
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                save_json(report_to_json(report),
                          fs::path(out_dir) / (bundle.task.id + ".report.json"));
            }
        }
    } catch (const std::exception& e) {
        out.result.failure = e.what();
        out.result.correct = false;
    }
    return out;
}

// Batch evaluation over bundles sharing one oracle; per-task failures do not
// abort the batch. Reports and the aggregate land in out_dir when given.
inline EvalResult run_eval(const std::vector<TaskBundle>& bundles, const EngineConfig& cfg,
                           Oracle& oracle, ProgramRunner& runner,
                           const std::string& out_dir = "") {
    if (bundles.empty())
        throw ConfigError("run_eval requires at least one bundle");
    EvalResult result;
    for (const auto& bundle : bundles) {
        SingleEvalOutcome one = eval_one(bundle, cfg, oracle, runner, out_dir);
        result.membership_total += one.membership_queries;
        result.equivalence_total += one.equivalence_queries;
        result.per_task.push_back(std::move(one.result));
    }
    result.pass_at_1 = score_pass_at_1(result.per_task);
    if (!out_dir.empty())
        save_json(eval_result_to_json(result),
                  std::filesystem::path(out_dir) / "eval.json");
    return result;
}

} // namespace pairsel
