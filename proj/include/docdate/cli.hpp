#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "docdate/errors.hpp"

namespace docdate {

// Flat key=value run configuration. Every key has a default, so a RunConfig
// is always complete; a config file and then command-line flags override
// values in that order (flag > file > default). Unknown keys are rejected
// wherever they appear.
class RunConfig {
  public:
    RunConfig();  // all defaults

    bool known(const std::string& key) const;
    void set(const std::string& key, const std::string& value);  // ConfigError on unknown key
    const std::string& get(const std::string& key) const;

    // Typed views of a value; ConfigError names the key on a malformed value.
    long long get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;  // true/false/1/0

    // Stable listing of every key with its current value, for --help.
    std::vector<std::pair<std::string, std::string>> items() const;

    // Applies `key = value` lines from a file ('#' comments, blank lines ok).
    void load_file(const std::string& path);

  private:
    std::map<std::string, std::string> values_;
};

struct ParsedCli {
    std::string subcommand;
    RunConfig config;
};

// args excludes argv[0]. Grammar: <subcommand> [--key value | --key=value]...
// A `--config <path>` flag loads a file before the remaining flags apply;
// `--dump-splits` may stand alone as a boolean. Dashes in flag names map to
// underscores. ConfigError on anything unknown or malformed.
ParsedCli parse_cli(const std::vector<std::string>& args);

// Subcommand bodies. Each throws on failure; `out` receives the line-oriented
// records a run produces (reports additionally go to their *_out paths).
void cmd_gen(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_tune(const RunConfig& cfg, std::ostream& out);
void cmd_mcnemar(const RunConfig& cfg, std::ostream& out);
void cmd_export_attention(const RunConfig& cfg, std::ostream& out);
void cmd_grad_check(const RunConfig& cfg, std::ostream& out);

// Entry point behind main(): dispatches, maps errors to exit statuses
// (0 success, 1 usage/config error, 2 runtime failure).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace docdate
