#pragma once

// Subcommands of the `resonant` tool. Each returns a RunSummary holding the
// artifacts written, measured-vs-expected checks and free-form report values;
// the summary decides the exit code.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "resonant/config.hpp"
#include "resonant/errors.hpp"

namespace resonant::cli {

using json = nlohmann::ordered_json;

class RunSummary {
public:
    explicit RunSummary(std::string command);

    void set_config(const ExperimentConfig& cfg);
    void artifact(const std::filesystem::path& p);

    /// `hard` checks gate the exit code; the others record claims.
    void check(const std::string& name, json measured, json expected, bool passed, bool hard,
               const std::string& note = {});
    /// A check that could not be evaluated (counts as failed when hard).
    void unavailable(const std::string& name, const std::string& reason, bool hard);

    json& report() { return doc_["report"]; }
    void record_error(const Error& e);
    void record_error(const std::string& kind, const std::string& message);

    bool hard_gates_passed() const;
    bool has_error() const { return doc_.contains("error"); }
    /// 0: all artifacts written and hard gates passed; 2: a hard gate failed; 1: error.
    int exit_code() const;
    json to_json() const;

private:
    json doc_;
};

struct StabilityRequest {
    bool surface = false;
    std::optional<double> section_Q;
    std::optional<std::filesystem::path> integral_index;
};

RunSummary cmd_simulate(const ExperimentConfig& cfg);
RunSummary cmd_stability(const ExperimentConfig& cfg, const StabilityRequest& req);
RunSummary cmd_verify_averaging(const ExperimentConfig& cfg);
RunSummary cmd_envelope(const ExperimentConfig& cfg);
RunSummary cmd_reproduce(const ExperimentConfig& cfg, const std::string& figure);

const std::vector<std::string>& figure_ids();

/// Writes summary.json into the output directory (when possible), prints the
/// summary to stdout and returns the exit code.
int finish(RunSummary& summary, const std::filesystem::path& out_dir);

}  // namespace resonant::cli
