#pragma once

/// Oracle abstraction and its three implementations: the HTTP LLM client,
/// the seeded stochastic oracle used by the theory tests, and the scripted
/// oracle for replay tests. Every query is a stateless call; nothing is
/// shared between queries except the configured transport.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pairsel/model.hpp"
#include "pairsel/prompts.hpp"
#include "pairsel/rng.hpp"

namespace pairsel {

enum class OracleKind { LlmHttp, Simulated, Scripted };

struct OracleConfig {
    OracleKind kind = OracleKind::Simulated;
    std::string endpoint;   // LLM_HTTP: full chat-completions URL
    std::string model_name; // LLM_HTTP
    double temperature = 0.0;
    std::uint64_t seed = 0; // SIMULATED
    double p = 1.0;         // SIMULATED: membership accuracy / correct-vs-incorrect diff rate
    double p_prime = 1.0;   // SIMULATED: incorrect-vs-incorrect diff rate
    std::string script_path; // SCRIPTED
    int max_unparseable_retries = 2;
    int max_transport_retries = 3;
    int max_concurrent_requests = 8;

    void validate() const {
        if (p < 0 || p > 1 || p_prime < 0 || p_prime > 1)
            throw ConfigError("oracle probabilities must lie in [0, 1]");
        if (kind == OracleKind::LlmHttp && (endpoint.empty() || model_name.empty()))
            throw ConfigError("LLM_HTTP oracle requires endpoint and model_name");
        if (max_unparseable_retries < 0)
            throw ConfigError("max_unparseable_retries must be >= 0");
    }
};

// Pair identity travels alongside each query for transcripts and for the
// scripted oracle's strict matching; it is not part of any prompt.
struct QueryContext {
    std::string first_id;
    std::string second_id;
};

struct MembershipReply {
    std::optional<MembershipWinner> winner; // nullopt: unparseable after retries
    std::string prompt;
    std::string raw;
};

struct EquivalenceReply {
    EquivalenceAnswer answer;
    std::string prompt;
};

class Oracle {
public:
    virtual ~Oracle() = default;

    virtual MembershipReply membership(const Task& task, const std::vector<InputExample>& inputs,
                                       const std::vector<std::string>& outputs_a,
                                       const std::vector<std::string>& outputs_b,
                                       const QueryContext& ctx) = 0;

    virtual EquivalenceReply equivalence(const Task& task, const std::string& source_a,
                                         const std::string& source_b, const QueryContext& ctx) = 0;

    virtual std::vector<InputExample> generate_inputs(const Task& task, std::size_t k) = 0;
};

// --- LLM over HTTP ----------------------------------------------------------

class HttpOracle : public Oracle {
public:
    explicit HttpOracle(OracleConfig cfg) : cfg_(std::move(cfg)), slots_(resolve_slots(cfg_)) {
        if (cfg_.endpoint.empty()) {
            if (const char* base = std::getenv("ORACLE_BASE_URL"))
                cfg_.endpoint = base;
        }
        cfg_.kind = OracleKind::LlmHttp;
        cfg_.validate();
        split_endpoint();
    }

    MembershipReply membership(const Task& task, const std::vector<InputExample>& inputs,
                               const std::vector<std::string>& outputs_a,
                               const std::vector<std::string>& outputs_b,
                               const QueryContext&) override {
        if (inputs.empty() || outputs_a.size() != inputs.size() ||
            outputs_b.size() != inputs.size())
            throw ConfigError("membership query requires aligned non-empty input/output lists");
        const std::string prompt = render_membership_prompt(task, inputs, outputs_a, outputs_b);
        std::string raw;
        for (int attempt = 0; attempt <= cfg_.max_unparseable_retries; ++attempt) {
            raw = complete(prompt);
            if (auto winner = parse_membership_reply(raw))
                return {winner, prompt, raw};
        }
        return {std::nullopt, prompt, raw};
    }

    EquivalenceReply equivalence(const Task& task, const std::string& source_a,
                                 const std::string& source_b, const QueryContext&) override {
        if (source_a.empty() || source_b.empty())
            throw ConfigError("equivalence query requires non-empty sources");
        const std::string prompt = render_equivalence_prompt(task, source_a, source_b);
        EquivalenceAnswer answer;
        for (int attempt = 0; attempt <= cfg_.max_unparseable_retries; ++attempt) {
            answer = parse_equivalence_reply(complete(prompt), task);
            if (answer.verdict != EquivalenceVerdict::Unparseable)
                break;
        }
        return {std::move(answer), prompt};
    }

    std::vector<InputExample> generate_inputs(const Task& task, std::size_t k) override {
        if (k < 1)
            throw ConfigError("generate_inputs requires k >= 1");
        const std::string prompt = render_input_gen_prompt(task, k);
        for (int attempt = 0; attempt <= cfg_.max_unparseable_retries; ++attempt) {
            std::vector<InputExample> inputs = parse_input_lines(complete(prompt), task, k);
            if (!inputs.empty())
                return inputs;
        }
        throw OracleError("no parseable generated inputs after retries for task '" + task.id +
                          "'");
    }

    // Parsed, arity-checked, deduplicated, capped at k. Exposed for tests.
    static std::vector<InputExample> parse_input_lines(const std::string& reply, const Task& task,
                                                       std::size_t k) {
        std::vector<InputExample> inputs;
        std::vector<std::string> seen;
        std::istringstream in(reply);
        std::string line;
        while (std::getline(in, line) && inputs.size() < k) {
            std::string trimmed = detail::trim(line);
            if (trimmed.empty())
                continue;
            auto input = parse_input_line(trimmed, task);
            if (!input)
                continue;
            std::string key;
            for (const auto& a : input->args)
                key += render(a) + "\x1f";
            if (std::find(seen.begin(), seen.end(), key) != seen.end())
                continue;
            seen.push_back(key);
            inputs.push_back(std::move(*input));
        }
        return inputs;
    }

private:
    OracleConfig cfg_;
    std::counting_semaphore<64> slots_;
    std::string scheme_host_; // e.g. "http://localhost:8080"
    std::string path_;        // e.g. "/v1/chat/completions"

    static std::ptrdiff_t resolve_slots(const OracleConfig& cfg) {
        int n = cfg.max_concurrent_requests;
        return n < 1 ? 1 : (n > 64 ? 64 : n);
    }

    void split_endpoint() {
        const std::string& url = cfg_.endpoint;
        std::size_t scheme = url.find("://");
        if (scheme == std::string::npos)
            throw ConfigError("endpoint must be an http(s) URL: " + url);
        std::size_t path = url.find('/', scheme + 3);
        if (path == std::string::npos) {
            scheme_host_ = url;
            path_ = "/v1/chat/completions";
        } else {
            scheme_host_ = url.substr(0, path);
            path_ = url.substr(path);
        }
    }

    std::string complete(const std::string& prompt) {
        nlohmann::json request = {
            {"model", cfg_.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", cfg_.temperature},
        };
        const std::string body = request.dump();

        slots_.acquire();
        struct Release {
            std::counting_semaphore<64>& s;
            ~Release() { s.release(); }
        } release{slots_};

        std::string last_error;
        for (int attempt = 0; attempt < cfg_.max_transport_retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(200 << (attempt - 1)));
            httplib::Client client(scheme_host_);
            client.set_connection_timeout(10);
            client.set_read_timeout(120);
            httplib::Headers headers;
            if (const char* key = std::getenv("ORACLE_API_KEY"))
                headers.emplace("Authorization", std::string("Bearer ") + key);
            auto res = client.Post(path_, headers, body, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "HTTP " + std::to_string(res->status);
                if (res->status >= 400 && res->status < 500 && res->status != 429)
                    break; // client errors are not retryable
                continue;
            }
            return extract_text(res->body);
        }
        throw TransportError("oracle request failed after retries (" + last_error + ")");
    }

    static std::string extract_text(const std::string& body) {
        nlohmann::json reply = nlohmann::json::parse(body, nullptr, false);
        if (reply.is_discarded())
            throw TransportError("oracle returned malformed JSON");
        try {
            const auto& choice = reply.at("choices").at(0);
            if (choice.contains("message"))
                return choice.at("message").at("content").get<std::string>();
            return choice.at("text").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw TransportError("oracle reply missing choices[0] text");
        }
    }
};

// --- simulated oracle -------------------------------------------------------

// Ground truth injected by the test harness; the oracle itself holds no task
// semantics. The theory module provides the table-driven implementation.
class GroundTruth {
public:
    virtual ~GroundTruth() = default;

    // Do these rendered outputs equal the ground-truth outputs on `inputs`?
    virtual bool outputs_match_truth(const Task& task, const std::vector<InputExample>& inputs,
                                     const std::vector<std::string>& rendered) const = 0;

    virtual bool source_correct(const Task& task, const std::string& source) const = 0;

    // A true differentiating input for the two sources, if one exists.
    virtual std::optional<InputExample>
    differentiating_input(const Task& task, const std::string& source_a,
                          const std::string& source_b) const = 0;

    virtual std::vector<InputExample> sample_inputs(const Task& task, std::size_t k) const = 0;
};

// Stochastic oracle with per-query accuracy p (one side correct) and diff
// rate p' (both incorrect). Each query draws from a stream derived from
// (seed, query ordinal), so answer sequences are reproducible even when
// queries are issued concurrently.
class SimulatedOracle : public Oracle {
public:
    SimulatedOracle(OracleConfig cfg, const GroundTruth& truth)
        : cfg_(std::move(cfg)), truth_(truth) {
        cfg_.kind = OracleKind::Simulated;
        cfg_.validate();
    }

    MembershipReply membership(const Task& task, const std::vector<InputExample>& inputs,
                               const std::vector<std::string>& outputs_a,
                               const std::vector<std::string>& outputs_b,
                               const QueryContext&) override {
        SplitMix64 rng = next_stream();
        const bool a_matches = truth_.outputs_match_truth(task, inputs, outputs_a);
        const bool b_matches = truth_.outputs_match_truth(task, inputs, outputs_b);
        MembershipWinner winner;
        if (a_matches != b_matches) {
            MembershipWinner correct = a_matches ? MembershipWinner::First
                                                 : MembershipWinner::Second;
            MembershipWinner other = a_matches ? MembershipWinner::Second
                                               : MembershipWinner::First;
            winner = rng.bernoulli(cfg_.p) ? correct : other;
        } else {
            winner = rng.bernoulli(0.5) ? MembershipWinner::First : MembershipWinner::Second;
        }
        std::string raw = winner == MembershipWinner::First ? "Program 1" : "Program 2";
        return {winner, render_membership_prompt(task, inputs, outputs_a, outputs_b),
                std::move(raw)};
    }

    EquivalenceReply equivalence(const Task& task, const std::string& source_a,
                                 const std::string& source_b, const QueryContext&) override {
        SplitMix64 rng = next_stream();
        const bool correct_a = truth_.source_correct(task, source_a);
        const bool correct_b = truth_.source_correct(task, source_b);
        std::string prompt = render_equivalence_prompt(task, source_a, source_b);

        std::optional<InputExample> diff;
        if (correct_a != correct_b) {
            if (rng.bernoulli(cfg_.p))
                diff = truth_.differentiating_input(task, source_a, source_b);
        } else if (!correct_a && !correct_b) {
            bool returns = rng.bernoulli(cfg_.p_prime);
            if (returns)
                diff = truth_.differentiating_input(task, source_a, source_b);
        }
        if (diff) {
            std::string raw = render_input_assignments(task, *diff);
            return {EquivalenceAnswer::diff(std::move(*diff), std::move(raw)),
                    std::move(prompt)};
        }
        return {EquivalenceAnswer::equivalent("NO_DIFF"), std::move(prompt)};
    }

    std::vector<InputExample> generate_inputs(const Task& task, std::size_t k) override {
        if (k < 1)
            throw ConfigError("generate_inputs requires k >= 1");
        return truth_.sample_inputs(task, k);
    }

private:
    OracleConfig cfg_;
    const GroundTruth& truth_;
    std::atomic<std::uint64_t> ordinal_{0};

    SplitMix64 next_stream() {
        return SplitMix64::derive(cfg_.seed, ordinal_.fetch_add(1));
    }
};

// --- scripted oracle --------------------------------------------------------

// Replays a fixed JSON script: {"inputs": [...], "queries": [{"kind", "pair",
// "reply"}, ...]}. Queries are consumed in order; any kind or pair mismatch is
// a hard error so replays cannot drift silently.
class ScriptedOracle : public Oracle {
public:
    static ScriptedOracle from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open oracle script: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ScriptedOracle(ss.str());
    }

    explicit ScriptedOracle(const std::string& script_json) {
        nlohmann::json doc = nlohmann::json::parse(script_json, nullptr, false);
        if (doc.is_discarded())
            throw ConfigError("oracle script is not valid JSON");
        const nlohmann::json* queries = nullptr;
        if (doc.is_array()) {
            queries = &doc;
        } else if (doc.is_object()) {
            if (doc.contains("queries"))
                queries = &doc.at("queries");
            if (doc.contains("inputs"))
                for (const auto& line : doc.at("inputs"))
                    input_lines_.push_back(line.get<std::string>());
        }
        if (queries) {
            for (const auto& q : *queries) {
                ScriptEntry e;
                e.kind = q.at("kind").get<std::string>();
                e.first = q.at("pair").at(0).get<std::string>();
                e.second = q.at("pair").at(1).get<std::string>();
                e.reply = q.at("reply").get<std::string>();
                entries_.push_back(std::move(e));
            }
        }
    }

    MembershipReply membership(const Task& task, const std::vector<InputExample>& inputs,
                               const std::vector<std::string>& outputs_a,
                               const std::vector<std::string>& outputs_b,
                               const QueryContext& ctx) override {
        const ScriptEntry& e = next("membership", ctx);
        return {parse_membership_reply(e.reply),
                render_membership_prompt(task, inputs, outputs_a, outputs_b), e.reply};
    }

    EquivalenceReply equivalence(const Task& task, const std::string& source_a,
                                 const std::string& source_b, const QueryContext& ctx) override {
        const ScriptEntry& e = next("equivalence", ctx);
        return {parse_equivalence_reply(e.reply, task),
                render_equivalence_prompt(task, source_a, source_b)};
    }

    std::vector<InputExample> generate_inputs(const Task& task, std::size_t) override {
        std::vector<InputExample> inputs;
        for (const auto& line : input_lines_) {
            auto input = parse_input_line(line, task);
            if (!input)
                throw ConfigError("scripted input line does not parse: " + line);
            inputs.push_back(std::move(*input));
        }
        return inputs;
    }

    std::size_t remaining() const { return entries_.size() - cursor_; }

private:
    struct ScriptEntry {
        std::string kind;
        std::string first;
        std::string second;
        std::string reply;
    };

    std::vector<ScriptEntry> entries_;
    std::vector<std::string> input_lines_;
    std::size_t cursor_ = 0;

    const ScriptEntry& next(const std::string& kind, const QueryContext& ctx) {
        if (cursor_ >= entries_.size())
            throw OracleError("oracle script exhausted at " + kind + " query " +
                              ctx.first_id + " vs " + ctx.second_id);
        const ScriptEntry& e = entries_[cursor_++];
        if (e.kind != kind || e.first != ctx.first_id || e.second != ctx.second_id)
            throw OracleError("oracle script mismatch: expected " + e.kind + " " + e.first +
                              " vs " + e.second + ", got " + kind + " " + ctx.first_id + " vs " +
                              ctx.second_id);
        return e;
    }
};

} // namespace pairsel
