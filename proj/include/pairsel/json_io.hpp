#pragma once

/// JSON codecs: the tagged ValueTree encoding, task-bundle files, selection
/// reports, and evaluation results. The bundle schema is documented in
/// schemas/bundle.schema.json.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pairsel/model.hpp"

namespace pairsel {

using Json = nlohmann::ordered_json;

// Tagged encoding: {"t":"int","v":"6"}. Int and float carry string payloads
// so arbitrary precision and shortest-round-trip rendering survive transport.
inline Json value_to_json(const Value& v) {
    switch (v.kind()) {
    case ValueKind::Null:
        return Json{{"t", "null"}};
    case ValueKind::Bool:
        return Json{{"t", "bool"}, {"v", v.as_bool()}};
    case ValueKind::Int:
        return Json{{"t", "int"}, {"v", v.as_int().str()}};
    case ValueKind::Float:
        return Json{{"t", "float"}, {"v", detail::format_double(v.as_float())}};
    case ValueKind::Str:
        return Json{{"t", "str"}, {"v", v.as_str()}};
    case ValueKind::Raw:
        return Json{{"t", "raw"}, {"v", v.raw_bytes()}};
    case ValueKind::List:
    case ValueKind::Tuple: {
        Json items = Json::array();
        for (const auto& x : v.items())
            items.push_back(value_to_json(x));
        return Json{{"t", v.kind() == ValueKind::List ? "list" : "tuple"}, {"v", items}};
    }
    case ValueKind::Map: {
        Json entries = Json::array();
        for (const auto& e : v.entries())
            entries.push_back(Json::array({value_to_json(e.key), value_to_json(e.value)}));
        return Json{{"t", "map"}, {"v", entries}};
    }
    }
    throw ConfigError("unencodable value");
}

inline Value value_from_json(const Json& j) {
    const std::string tag = j.at("t").get<std::string>();
    if (tag == "null")
        return Value::null();
    if (tag == "bool")
        return Value::boolean(j.at("v").get<bool>());
    if (tag == "int")
        return Value::integer(BigInt(j.at("v").get<std::string>()));
    if (tag == "float") {
        const Json& v = j.at("v");
        if (v.is_number())
            return Value::real(v.get<double>());
        Value parsed = parse_value_literal(v.get<std::string>());
        if (parsed.kind() == ValueKind::Int)
            return Value::real(parsed.as_int().convert_to<double>());
        if (parsed.kind() != ValueKind::Float)
            throw ConfigError("float tag with non-numeric payload");
        return parsed;
    }
    if (tag == "str")
        return Value::str(j.at("v").get<std::string>());
    if (tag == "raw")
        return Value::raw(j.at("v").get<std::string>());
    if (tag == "list" || tag == "tuple") {
        Value::Items items;
        for (const auto& x : j.at("v"))
            items.push_back(value_from_json(x));
        return tag == "list" ? Value::list(std::move(items)) : Value::tuple(std::move(items));
    }
    if (tag == "map") {
        Value::MapEntries entries;
        for (const auto& e : j.at("v"))
            entries.push_back({value_from_json(e.at(0)), value_from_json(e.at(1))});
        return Value::map(std::move(entries));
    }
    throw ConfigError("unknown value tag: " + tag);
}

inline Json input_to_json(const InputExample& input) {
    Json args = Json::array();
    for (const auto& a : input.args)
        args.push_back(value_to_json(a));
    return args;
}

inline InputExample input_from_json(const Json& j) {
    InputExample input;
    for (const auto& a : j)
        input.args.push_back(value_from_json(a));
    return input;
}

// --- task bundles ------------------------------------------------------------

struct HiddenTest {
    InputExample input;
    Value expected;
};

// One task with its candidate set. hidden_tests are scoring-only: run_eval
// hands the engine a projection that does not contain them.
struct TaskBundle {
    Task task;
    std::vector<Candidate> candidates;
    std::vector<InputExample> initial_inputs;
    std::vector<HiddenTest> hidden_tests;
};

inline Json bundle_to_json(const TaskBundle& b) {
    Json j;
    j["id"] = b.task.id;
    j["description"] = b.task.description;
    if (b.task.entry_point)
        j["entry_point"] = *b.task.entry_point;
    j["io_mode"] = b.task.io_mode == IoMode::Function ? "function" : "stdio";
    if (!b.task.params.empty())
        j["params"] = b.task.params;
    j["initial_inputs"] = Json::array();
    for (const auto& input : b.initial_inputs)
        j["initial_inputs"].push_back(input_to_json(input));
    j["candidates"] = Json::array();
    for (const auto& c : b.candidates) {
        Json cj{{"id", c.id}, {"source", c.source}};
        if (c.origin)
            cj["origin"] = *c.origin;
        j["candidates"].push_back(std::move(cj));
    }
    j["hidden_tests"] = Json::array();
    for (const auto& t : b.hidden_tests)
        j["hidden_tests"].push_back(
            Json{{"args", input_to_json(t.input)}, {"expected", value_to_json(t.expected)}});
    return j;
}

inline TaskBundle bundle_from_json(const Json& j) {
    TaskBundle b;
    b.task.id = j.at("id").get<std::string>();
    b.task.description = j.at("description").get<std::string>();
    if (j.contains("entry_point"))
        b.task.entry_point = j.at("entry_point").get<std::string>();
    const std::string mode = j.at("io_mode").get<std::string>();
    if (mode == "function")
        b.task.io_mode = IoMode::Function;
    else if (mode == "stdio")
        b.task.io_mode = IoMode::Stdio;
    else
        throw ConfigError("unknown io_mode: " + mode);
    if (j.contains("params"))
        b.task.params = j.at("params").get<std::vector<std::string>>();
    b.task.validate();
    for (const auto& input : j.at("initial_inputs"))
        b.initial_inputs.push_back(input_from_json(input));
    for (const auto& cj : j.at("candidates")) {
        Candidate c;
        c.id = cj.at("id").get<std::string>();
        c.source = cj.at("source").get<std::string>();
        if (cj.contains("origin"))
            c.origin = cj.at("origin").get<std::string>();
        if (c.source.empty())
            throw ConfigError("candidate '" + c.id + "' has empty source");
        for (const auto& other : b.candidates)
            if (other.id == c.id)
                throw ConfigError("duplicate candidate id: " + c.id);
        b.candidates.push_back(std::move(c));
    }
    if (j.contains("hidden_tests")) {
        for (const auto& tj : j.at("hidden_tests"))
            b.hidden_tests.push_back(HiddenTest{input_from_json(tj.at("args")),
                                                value_from_json(tj.at("expected"))});
    }
    return b;
}

inline TaskBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open bundle: " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("bundle is not valid JSON: " + path.string());
    return bundle_from_json(j);
}

inline void save_json(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// --- selection report ----------------------------------------------------------

inline Json report_to_json(const SelectionReport& r) {
    Json j;
    j["selected"] = r.selected;
    j["iterations"] = r.iterations;
    j["membership_queries"] = r.membership_queries;
    j["equivalence_queries"] = r.equivalence_queries;
    j["trace"] = Json::array();
    for (const auto& it : r.trace) {
        Json ij;
        ij["clusters"] = Json::array();
        for (std::size_t c = 0; c < it.clusters.size(); ++c) {
            Json cj;
            cj["members"] = it.clusters[c].members;
            cj["outputs"] = it.rendered_outputs[c];
            ij["clusters"].push_back(std::move(cj));
        }
        ij["scores"] = it.scores;
        ij["chosen_index"] = it.chosen_index;
        ij["comparisons"] = Json::array();
        for (const auto& cmp : it.comparisons)
            ij["comparisons"].push_back(Json{{"first", cmp.first_cluster},
                                             {"second", cmp.second_cluster},
                                             {"oracle_called", cmp.oracle_called},
                                             {"unparseable", cmp.unparseable},
                                             {"winner", cmp.winner_cluster}});
        ij["equivalence"] = Json::array();
        for (const auto& eq : it.equivalence) {
            Json ej{{"first", eq.first_id},
                    {"second", eq.second_id},
                    {"verdict", to_string(eq.verdict)},
                    {"validated", eq.validated}};
            if (eq.diff_input)
                ej["diff_input"] = input_to_json(*eq.diff_input);
            ij["equivalence"].push_back(std::move(ej));
        }
        if (it.refined_input)
            ij["refined_input"] = input_to_json(*it.refined_input);
        j["trace"].push_back(std::move(ij));
    }
    j["transcript"] = Json::array();
    for (const auto& t : r.transcript)
        j["transcript"].push_back(Json{{"kind", t.kind},
                                       {"first", t.first_id},
                                       {"second", t.second_id},
                                       {"prompt", t.prompt},
                                       {"reply", t.reply}});
    return j;
}

} // namespace pairsel
