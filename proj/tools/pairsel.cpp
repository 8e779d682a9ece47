// pairsel command-line interface: select / eval / replay drive the selection
// engine over task bundles; bounds / simulate / gen-synthetic expose the
// robustness formulas, their Monte Carlo verification, and the synthetic
// ground-truth suite. Exit codes: 0 ok, 2 config error, 3 oracle transport
// failure, 4 evaluation or runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "pairsel/engine.hpp"
#include "pairsel/evalkit.hpp"
#include "pairsel/json_io.hpp"
#include "pairsel/oracle.hpp"
#include "pairsel/runner.hpp"
#include "pairsel/theory.hpp"

namespace fs = std::filesystem;
using namespace pairsel;

namespace {

struct CommonFlags {
    std::string oracle = "simulated"; // simulated | scripted | http
    std::uint64_t seed = 0;
    double timeout_secs = 10.0;
    int max_retries = 2;
    std::string out;

    // oracle-specific
    std::string script;
    std::string endpoint;
    std::string model;
    double temperature = 0.0;
    double p = 1.0;
    double p_prime = 1.0;
    std::string truth;     // sidecar for one bundle
    std::string truth_dir; // sidecar directory for eval
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--oracle", f.oracle, "Oracle kind: simulated | scripted | http")
        ->check(CLI::IsMember({"simulated", "scripted", "http"}));
    cmd->add_option("--seed", f.seed, "Seed for simulated oracles and Monte Carlo");
    cmd->add_option("--timeout-secs", f.timeout_secs, "Per-execution wall-clock timeout");
    cmd->add_option("--max-retries", f.max_retries, "Unparseable-reply retries per query");
    cmd->add_option("--out", f.out, "Output file or directory");
    cmd->add_option("--script", f.script, "Oracle script (scripted oracle)");
    cmd->add_option("--endpoint", f.endpoint,
                    "Chat-completions URL (http oracle; also ORACLE_BASE_URL)");
    cmd->add_option("--model", f.model, "Model name (http oracle)");
    cmd->add_option("--temperature", f.temperature, "Sampling temperature (http oracle)");
    cmd->add_option("--p", f.p, "Simulated oracle accuracy p");
    cmd->add_option("--p-prime", f.p_prime, "Simulated incorrect-vs-incorrect diff rate p'");
    cmd->add_option("--truth", f.truth, "Ground-truth sidecar for one bundle (simulated)");
    cmd->add_option("--truth-dir", f.truth_dir,
                    "Directory of <id>.truth.json sidecars (simulated)");
}

SubprocessRunner make_runner(const CommonFlags& f) {
    RunnerConfig cfg;
    cfg.timeout = std::chrono::duration<double>(f.timeout_secs);
    return SubprocessRunner(cfg);
}

struct TruthSidecar {
    std::vector<long long> table;
    std::vector<InputExample> domain;
};

TruthSidecar load_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open truth sidecar: " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("truth sidecar is not valid JSON: " + path.string());
    TruthSidecar sc;
    for (const auto& v : j.at("truth_table"))
        sc.table.push_back(v.get<long long>());
    for (const auto& d : j.at("domain"))
        sc.domain.push_back(input_from_json(d));
    return sc;
}

// Keeps the per-bundle ground truth (and the synthetic view it points into)
// alive for the oracle's lifetime.
struct OracleBundle {
    std::unique_ptr<SyntheticTask> synthetic;
    std::unique_ptr<GroundTruth> truth;
    std::unique_ptr<Oracle> oracle;
};

OracleBundle make_oracle(const CommonFlags& f, const TaskBundle* bundle) {
    OracleBundle ob;
    if (f.oracle == "scripted") {
        if (f.script.empty())
            throw ConfigError("--oracle scripted requires --script");
        ob.oracle = std::make_unique<ScriptedOracle>(ScriptedOracle::from_file(f.script));
        return ob;
    }
    if (f.oracle == "http") {
        OracleConfig cfg;
        cfg.kind = OracleKind::LlmHttp;
        cfg.endpoint = f.endpoint;
        cfg.model_name = f.model;
        cfg.temperature = f.temperature;
        cfg.max_unparseable_retries = f.max_retries;
        ob.oracle = std::make_unique<HttpOracle>(cfg);
        return ob;
    }
    // simulated: rebuild table ground truth from the sidecar
    if (!bundle)
        throw ConfigError("simulated oracle requires a task bundle");
    fs::path sidecar;
    if (!f.truth.empty()) {
        sidecar = f.truth;
    } else {
        fs::path dir = f.truth_dir;
        if (dir.empty())
            throw ConfigError("--oracle simulated requires --truth or --truth-dir");
        sidecar = dir / (bundle->task.id + ".truth.json");
    }
    TruthSidecar sc = load_sidecar(sidecar);
    ob.synthetic = std::make_unique<SyntheticTask>(synthetic_from_parts(
        bundle->task, bundle->candidates, std::move(sc.table), std::move(sc.domain)));
    ob.truth = std::make_unique<TableGroundTruth>(*ob.synthetic);
    OracleConfig cfg;
    cfg.kind = OracleKind::Simulated;
    cfg.seed = f.seed;
    cfg.p = f.p;
    cfg.p_prime = f.p_prime;
    ob.oracle = std::make_unique<SimulatedOracle>(cfg, *ob.truth);
    return ob;
}

void write_or_print(const Json& j, const std::string& out) {
    if (out.empty())
        std::cout << j.dump(2) << "\n";
    else
        save_json(j, out);
}

std::vector<InputExample> initial_inputs_for(const TaskBundle& bundle, Oracle& oracle) {
    if (!bundle.initial_inputs.empty())
        return bundle.initial_inputs;
    return oracle.generate_inputs(bundle.task, 5);
}

int cmd_select(const CommonFlags& f, const std::string& bundle_path, bool do_preprocess,
               bool verbose) {
    TaskBundle bundle = load_bundle(bundle_path);
    OracleBundle ob = make_oracle(f, &bundle);
    SubprocessRunner runner = make_runner(f);

    std::vector<Candidate> candidates = bundle.candidates;
    if (do_preprocess) {
        PreprocessResult pre =
            preprocess(candidates, bundle.task, initial_inputs_for(bundle, *ob.oracle), runner);
        for (const auto& [cand, reason] : pre.dropped)
            std::cerr << "dropped " << cand.id << ": " << to_string(reason) << "\n";
        candidates = pre.kept;
    }

    EngineConfig cfg;
    cfg.max_unparseable_retries = f.max_retries;
    SelectionReport report =
        select(bundle.task, initial_inputs_for(bundle, *ob.oracle), candidates, *ob.oracle,
               runner, cfg, verbose ? &std::cerr : nullptr);
    write_or_print(report_to_json(report), f.out);
    return 0;
}

int cmd_replay(const CommonFlags& f, const std::string& bundle_path,
               const std::string& script_path, bool verbose) {
    CommonFlags flags = f;
    flags.oracle = "scripted";
    flags.script = script_path.empty() ? f.script : script_path;
    return cmd_select(flags, bundle_path, false, verbose);
}

int cmd_eval(const CommonFlags& f, const std::string& bundles_dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(bundles_dir)) {
        if (!entry.is_regular_file())
            continue;
        const std::string name = entry.path().filename().string();
        if (name.size() > 5 && name.ends_with(".json") && !name.ends_with(".truth.json"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ConfigError("no bundle files in " + bundles_dir);

    SubprocessRunner runner = make_runner(f);
    EngineConfig cfg;
    cfg.max_unparseable_retries = f.max_retries;
    const std::string out_dir = f.out.empty() ? "eval-out" : f.out;

    CommonFlags flags = f;
    if (flags.oracle == "simulated" && flags.truth_dir.empty())
        flags.truth_dir = bundles_dir;

    // Bundles run one at a time; the simulated oracle is rebuilt per bundle
    // because its ground truth is per-task.
    EvalResult merged;
    std::vector<TaskBundle> one(1);
    for (const auto& file : files) {
        one[0] = load_bundle(file);
        OracleBundle ob = make_oracle(flags, &one[0]);
        EvalResult r = run_eval_batch(one, cfg, *ob.oracle, runner, out_dir);
        merged.per_task.push_back(r.per_task.at(0));
        merged.membership_total += r.membership_total;
        merged.equivalence_total += r.equivalence_total;
    }
    merged.pass_at_1 = score_pass_at_1(merged.per_task);
    save_json(eval_result_to_json(merged), fs::path(out_dir) / "eval.json");
    std::cout << "pass@1 " << merged.pass_at_1 << " over "
              << std::count_if(merged.per_task.begin(), merged.per_task.end(),
                               [](const TaskResult& t) { return !t.excluded; })
              << " scored tasks (" << merged.per_task.size() << " total), queries m="
              << merged.membership_total << " e=" << merged.equivalence_total << "\n";
    return 0;
}

int cmd_bounds(const CommonFlags& f, int theorem, int n, double p, double j, bool maximize,
               int cluster_size, int d) {
    std::ostringstream csv;
    if (theorem == 5) {
        double bound = maximize ? copeland_lower_bound_max_j(n, p)
                                : copeland_lower_bound(TournamentParams{n, p, j});
        std::cout << "theorem5 n=" << n << " p=" << p
                  << (maximize ? " j=max-grid" : " j=" + std::to_string(j))
                  << " bound=" << bound << "\n";
        csv << "n,p,bound\n" << n << ',' << p << ',' << bound << '\n';
    } else if (theorem == 6) {
        DiffParams params{cluster_size, d, p, f.p_prime};
        double exact = diff_probability(params);
        std::cout << "theorem6 cluster_size=" << cluster_size << " d=" << d << " p=" << p
                  << " p_prime=" << f.p_prime << " probability=" << exact << "\n";
        csv << "cluster_size,d,p,p_prime,probability\n"
            << cluster_size << ',' << d << ',' << p << ',' << f.p_prime << ',' << exact << '\n';
    } else {
        throw ConfigError("--theorem must be 5 or 6");
    }
    if (!f.out.empty()) {
        std::ofstream out(f.out);
        if (!out)
            throw ConfigError("cannot write " + f.out);
        out << csv.str();
    }
    return 0;
}

int cmd_simulate(const CommonFlags& f, const std::string& kind, std::size_t trials) {
    std::ostringstream csv;
    if (kind == "fig4") {
        std::vector<TournamentCurvePoint> grid;
        for (double p : {0.8, 0.9, 0.95})
            for (int n = 5; n <= 40; n += 5)
                grid.push_back({n, p});
        emit_tournament_curves(grid, trials, f.seed, csv);
    } else if (kind == "fig5") {
        std::vector<DiffCurvePoint> grid;
        for (int size : {5, 10, 15, 20})
            for (double p : {0.5, 0.7})
                for (double pp : {0.1, 0.3})
                    for (int d = 1; d <= size; ++d)
                        grid.push_back({size, d, p, pp});
        emit_diff_curves(grid, trials, f.seed, csv);
    } else {
        throw ConfigError("--kind must be fig4 or fig5");
    }
    if (f.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(f.out);
        if (!out)
            throw ConfigError("cannot write " + f.out);
        out << csv.str();
    }
    return 0;
}

int cmd_gen_synthetic(const CommonFlags& f, std::size_t num_tasks, std::size_t domain_size,
                      std::size_t num_candidates, double error_rate) {
    const std::string out_dir = f.out.empty() ? "synthetic" : f.out;
    fs::create_directories(out_dir);
    auto suite = generate_synthetic_suite(num_tasks, domain_size, num_candidates, error_rate,
                                          f.seed);
    for (const auto& st : suite) {
        TaskBundle bundle;
        bundle.task = st.task;
        bundle.candidates = st.candidates;
        bundle.initial_inputs = st.domain;
        for (std::size_t i = 0; i < st.domain.size(); ++i)
            bundle.hidden_tests.push_back(
                HiddenTest{st.domain[i], Value::integer(st.truth_table[i])});
        save_json(bundle_to_json(bundle), fs::path(out_dir) / (st.task.id + ".json"));

        Json sidecar;
        sidecar["task_id"] = st.task.id;
        sidecar["truth_table"] = st.truth_table;
        sidecar["domain"] = Json::array();
        for (const auto& d : st.domain)
            sidecar["domain"].push_back(input_to_json(d));
        save_json(sidecar, fs::path(out_dir) / (st.task.id + ".truth.json"));
    }
    std::cout << "wrote " << suite.size() << " bundles to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Program selection by pairwise tournaments over an LLM oracle"};
    app.require_subcommand(1);

    CommonFlags f;

    auto* sel = app.add_subcommand("select", "Select a program from one task bundle");
    std::string bundle_path;
    bool do_preprocess = false, verbose = false;
    sel->add_option("--bundle", bundle_path, "Task bundle JSON")->required();
    sel->add_flag("--preprocess", do_preprocess,
                  "Drop stochastic/nonterminating candidates first");
    sel->add_flag("--verbose", verbose, "Per-query log lines on stderr");
    add_common(sel, f);

    auto* rep = app.add_subcommand("replay", "Replay a selection against a scripted oracle");
    std::string replay_bundle, replay_script;
    bool replay_verbose = false;
    rep->add_option("--bundle", replay_bundle, "Task bundle JSON")->required();
    rep->add_option("--script", replay_script, "Oracle script JSON")->required();
    rep->add_flag("--verbose", replay_verbose, "Per-query log lines on stderr");
    add_common(rep, f);

    auto* ev = app.add_subcommand("eval", "Evaluate pass@1 over a directory of bundles");
    std::string bundles_dir;
    ev->add_option("--bundles", bundles_dir, "Directory of bundle JSON files")->required();
    add_common(ev, f);

    auto* bo = app.add_subcommand("bounds", "Evaluate the tournament/diff formulas");
    int theorem = 5, n = 25, d = 1, cluster_size = 10;
    double p = 0.9, j = 0.0;
    bool maximize = true;
    bo->add_option("--theorem", theorem, "5 (tournament bound) or 6 (diff probability)");
    bo->add_option("--n", n, "Incorrect-cluster count (theorem 5)");
    bo->add_option("--p", p, "Oracle accuracy / diff rate");
    bo->add_option("--j", j, "Bound parameter; implies no grid maximization")
        ->each([&maximize](const std::string&) { maximize = false; });
    bo->add_option("--cluster-size", cluster_size, "Cluster size (theorem 6)");
    bo->add_option("--d", d, "Incorrect-program count (theorem 6)");
    add_common(bo, f);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo curves as CSV");
    std::string kind = "fig4";
    std::size_t trials = 10000;
    sim->add_option("--kind", kind, "fig4 (tournament) or fig5 (diff search)");
    sim->add_option("--trials", trials, "Trials per grid point");
    add_common(sim, f);

    auto* gen = app.add_subcommand("gen-synthetic", "Emit a synthetic ground-truth suite");
    std::size_t num_tasks = 10, domain_size = 8, num_candidates = 10;
    double error_rate = 0.3;
    gen->add_option("--num-tasks", num_tasks, "Number of tasks");
    gen->add_option("--domain-size", domain_size, "Input domain size per task");
    gen->add_option("--num-candidates", num_candidates, "Candidates per task");
    gen->add_option("--error-rate", error_rate, "Per-entry corruption probability");
    add_common(gen, f);

    try {
        app.parse(argc, argv);
        if (sel->parsed())
            return cmd_select(f, bundle_path, do_preprocess, verbose);
        if (rep->parsed())
            return cmd_replay(f, replay_bundle, replay_script, replay_verbose);
        if (ev->parsed())
            return cmd_eval(f, bundles_dir);
        if (bo->parsed())
            return cmd_bounds(f, theorem, n, p, j, maximize, cluster_size, d);
        if (sim->parsed())
            return cmd_simulate(f, kind, trials);
        if (gen->parsed())
            return cmd_gen_synthetic(f, num_tasks, domain_size, num_candidates, error_rate);
        return 2;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
