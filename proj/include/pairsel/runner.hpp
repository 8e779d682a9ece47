#pragma once

/// Candidate execution in an isolated subprocess: temp workdir per run,
/// wall-clock timeout with process-group kill, env allowlist. Also the
/// preprocessing pass that removes stochastic and nonterminating candidates.
///
/// Isolation is process + temp dir + timeout, not a security sandbox; treat
/// candidate code as semi-trusted benchmark programs.

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pairsel/model.hpp"

namespace pairsel {

struct RunnerConfig {
    // Whitespace-split, no shell. {file} is the program path, {payload_file}
    // the rendered-arguments file.
    std::string command_template = "python3 {file} {payload_file}";
    std::chrono::duration<double> timeout = std::chrono::seconds(10);
    enum class WorkdirPolicy { TempPerRun } workdir_policy = WorkdirPolicy::TempPerRun;
    std::vector<std::string> env_allowlist = {"PATH", "HOME", "LANG"};

    void validate() const {
        std::size_t n = 0, pos = 0;
        while ((pos = command_template.find("{file}", pos)) != std::string::npos) {
            ++n;
            pos += 6;
        }
        if (n != 1)
            throw ConfigError("command_template must contain {file} exactly once");
        if (timeout.count() <= 0)
            throw ConfigError("timeout must be positive");
    }
};

class ProgramRunner {
public:
    virtual ~ProgramRunner() = default;
    virtual ExecutionOutcome execute(const Candidate& candidate, const Task& task,
                                     const InputExample& input) = 0;
};

namespace detail {

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

inline std::vector<std::string> split_command(const std::string& tmpl) {
    std::vector<std::string> out;
    std::istringstream in(tmpl);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Last non-empty line of stdout, which the FUNCTION harness guarantees is the
// rendered return value.
inline std::string last_nonempty_line(const std::string& text) {
    std::size_t end = text.size();
    while (true) {
        while (end > 0 && (text[end - 1] == '\n' || text[end - 1] == '\r'))
            --end;
        if (end == 0)
            return "";
        std::size_t start = text.rfind('\n', end - 1);
        start = start == std::string::npos ? 0 : start + 1;
        std::string line = text.substr(start, end - start);
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            return line;
        end = start;
    }
}

} // namespace detail

class SubprocessRunner : public ProgramRunner {
public:
    explicit SubprocessRunner(RunnerConfig cfg) : cfg_(std::move(cfg)) {
        if (const char* env = std::getenv("RUNNER_TIMEOUT_SECS")) {
            char* end = nullptr;
            double secs = std::strtod(env, &end);
            if (end != env && secs > 0)
                cfg_.timeout = std::chrono::duration<double>(secs);
        }
        cfg_.validate();
    }

    const RunnerConfig& config() const { return cfg_; }

    ExecutionOutcome execute(const Candidate& candidate, const Task& task,
                             const InputExample& input) override {
        namespace fs = std::filesystem;
        task.validate();
        if (task.io_mode == IoMode::Function && input.args.size() != task.params.size())
            throw ConfigError("input arity does not match task parameters");

        fs::path workdir = make_temp_dir();
        struct DirGuard {
            fs::path p;
            ~DirGuard() {
                std::error_code ec;
                fs::remove_all(p, ec);
            }
        } guard{workdir};

        fs::path program = workdir / "program.py";
        fs::path payload = workdir / "payload.txt";
        fs::path out_path = workdir / "stdout.txt";
        fs::path err_path = workdir / "stderr.txt";

        write_file(program, task.io_mode == IoMode::Function
                                ? wrap_function_source(candidate.source, *task.entry_point)
                                : candidate.source);
        write_file(payload, task.io_mode == IoMode::Function ? render_payload(input)
                                                             : input.args.at(0).raw_bytes());

        std::vector<std::string> argv;
        for (const auto& tok : detail::split_command(cfg_.command_template)) {
            std::string t = detail::replace_all(tok, "{file}", program.string());
            t = detail::replace_all(t, "{payload_file}", payload.string());
            argv.push_back(std::move(t));
        }

        int exit_code = 0;
        bool timed_out = false, signaled = false;
        int term_signal = 0;
        spawn_and_wait(argv, workdir, payload, out_path, err_path,
                       task.io_mode == IoMode::Stdio, exit_code, timed_out, signaled,
                       term_signal);

        if (timed_out)
            return ExecutionOutcome::timeout("wall clock exceeded " +
                                             std::to_string(cfg_.timeout.count()) + "s");
        if (signaled)
            return ExecutionOutcome::error("killed by signal " + std::to_string(term_signal));
        if (exit_code != 0) {
            std::string err = detail::read_file(err_path);
            if (err.size() > 500)
                err.resize(500);
            return ExecutionOutcome::error("exit code " + std::to_string(exit_code) +
                                           (err.empty() ? "" : ": " + err));
        }

        std::string stdout_text = detail::read_file(out_path);
        if (task.io_mode == IoMode::Stdio)
            return ExecutionOutcome::ok(Value::raw(std::move(stdout_text)));
        std::string line = detail::last_nonempty_line(stdout_text);
        try {
            return ExecutionOutcome::ok(parse_value_literal(line));
        } catch (const ParseError& e) {
            return ExecutionOutcome::error(std::string("unparseable program output: ") + e.what());
        }
    }

private:
    RunnerConfig cfg_;

    static std::filesystem::path make_temp_dir() {
        namespace fs = std::filesystem;
        fs::path base = fs::temp_directory_path();
        std::string tmpl = (base / "pairsel.XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data()))
            throw RunnerError(std::string("mkdtemp failed: ") + std::strerror(errno));
        return fs::path(buf.data());
    }

    static void write_file(const std::filesystem::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary);
        out << content;
        if (!out)
            throw RunnerError("cannot write " + p.string());
    }

    // The harness reads one rendered literal per line from the payload file,
    // calls the entry point, and prints the repr of the result on the last
    // line of stdout. repr output is literal-compatible with our parser.
    static std::string wrap_function_source(const std::string& source,
                                            const std::string& entry_point) {
        std::string s = source;
        s += "\n\n";
        s += "def _pairsel_harness():\n"
             "    import ast as _ast, sys as _sys\n"
             "    _args = []\n"
             "    with open(_sys.argv[1], 'r', encoding='utf-8') as _fh:\n"
             "        for _line in _fh:\n"
             "            _line = _line.strip()\n"
             "            if _line:\n"
             "                _args.append(_ast.literal_eval(_line))\n"
             "    _result = ";
        s += entry_point;
        s += "(*_args)\n"
             "    _sys.stdout.write('\\n' + repr(_result) + '\\n')\n"
             "\n"
             "_pairsel_harness()\n";
        return s;
    }

    static std::string render_payload(const InputExample& input) {
        std::string out;
        for (const auto& arg : input.args) {
            out += render(arg);
            out += '\n';
        }
        return out;
    }

    void spawn_and_wait(const std::vector<std::string>& argv,
                        const std::filesystem::path& workdir,
                        const std::filesystem::path& stdin_file,
                        const std::filesystem::path& out_path,
                        const std::filesystem::path& err_path, bool feed_stdin, int& exit_code,
                        bool& timed_out, bool& signaled, int& term_signal) const {
        if (argv.empty())
            throw RunnerError("empty command");

        std::vector<std::string> env = build_env();
        std::vector<char*> cargv, cenv;
        for (const auto& a : argv)
            cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        for (const auto& e : env)
            cenv.push_back(const_cast<char*>(e.c_str()));
        cenv.push_back(nullptr);

        pid_t pid = fork();
        if (pid < 0)
            throw RunnerError(std::string("fork failed: ") + std::strerror(errno));
        if (pid == 0) {
            setpgid(0, 0); // own process group so the whole tree can be killed
            int in_fd = open(feed_stdin ? stdin_file.c_str() : "/dev/null", O_RDONLY);
            int out_fd = open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
            int err_fd = open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
            if (in_fd < 0 || out_fd < 0 || err_fd < 0)
                _exit(127);
            dup2(in_fd, STDIN_FILENO);
            dup2(out_fd, STDOUT_FILENO);
            dup2(err_fd, STDERR_FILENO);
            if (chdir(workdir.c_str()) != 0)
                _exit(127);
            execvpe(cargv[0], cargv.data(), cenv.data());
            _exit(127);
        }

        setpgid(pid, pid); // also from the parent, against the startup race

        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  cfg_.timeout);
        int status = 0;
        while (true) {
            pid_t r = waitpid(pid, &status, WNOHANG);
            if (r == pid)
                break;
            if (r < 0 && errno != EINTR)
                throw RunnerError(std::string("waitpid failed: ") + std::strerror(errno));
            if (std::chrono::steady_clock::now() >= deadline) {
                kill(-pid, SIGKILL);
                waitpid(pid, &status, 0);
                timed_out = true;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }

        if (WIFSIGNALED(status)) {
            signaled = true;
            term_signal = WTERMSIG(status);
        } else {
            exit_code = WEXITSTATUS(status);
        }
    }

    std::vector<std::string> build_env() const {
        std::vector<std::string> env;
        for (const auto& name : cfg_.env_allowlist) {
            if (const char* v = std::getenv(name.c_str()))
                env.push_back(name + "=" + v);
        }
        // Deterministic hash ordering and UTF-8 pipes for Python candidates;
        // harmless for anything else.
        env.push_back("PYTHONHASHSEED=0");
        env.push_back("PYTHONIOENCODING=utf-8");
        return env;
    }
};

enum class DropReason { Nondeterministic, Nonterminating };

inline const char* to_string(DropReason r) {
    return r == DropReason::Nondeterministic ? "NONDETERMINISTIC" : "NONTERMINATING";
}

struct PreprocessResult {
    std::vector<Candidate> kept;
    std::vector<std::pair<Candidate, DropReason>> dropped;
};

// Runs each candidate twice per input. Drops NONDETERMINISTIC when any input
// yields two non-equal OK values, NONTERMINATING when every input times out.
// Candidates erroring everywhere are kept: errors are deterministic outputs
// for clustering purposes and such clusters lose tournaments on their own.
inline PreprocessResult preprocess(const std::vector<Candidate>& candidates, const Task& task,
                                   const std::vector<InputExample>& inputs,
                                   ProgramRunner& runner) {
    if (inputs.empty())
        throw ConfigError("preprocess requires at least one input");
    PreprocessResult result;
    for (const auto& cand : candidates) {
        bool nondet = false;
        std::size_t timeouts = 0;
        for (const auto& input : inputs) {
            ExecutionOutcome first = runner.execute(cand, task, input);
            if (first.status == ExecStatus::Timeout) {
                ++timeouts;
                continue; // a second run cannot produce two OK values
            }
            ExecutionOutcome second = runner.execute(cand, task, input);
            if (first.status == ExecStatus::Ok && second.status == ExecStatus::Ok &&
                !value_equal(*first.value, *second.value)) {
                nondet = true;
                break;
            }
        }
        if (nondet)
            result.dropped.emplace_back(cand, DropReason::Nondeterministic);
        else if (timeouts == inputs.size())
            result.dropped.emplace_back(cand, DropReason::Nonterminating);
        else
            result.kept.push_back(cand);
    }
    return result;
}

} // namespace pairsel
