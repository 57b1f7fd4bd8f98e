#pragma once

#include "nvsplit/hjm.hpp"
#include "nvsplit/montecarlo.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvsplit {

inline constexpr std::string_view kLibraryVersion = "1.0.0";

/// Exit statuses of the command-line harness.
enum class ExitStatus : int {
    Ok = 0,
    SelftestFailure = 1,
    Config = 2,
    Overflow = 3,
    Inconclusive = 4,
};

int exit_code_for(ErrorKind kind);

struct ConfigIssue {
    std::string path; // JSON pointer into the document, "/" for the root
    std::string message;
};

/// Every violation found in a config document, not just the first.
class ConfigValidationError : public ConfigError {
public:
    explicit ConfigValidationError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// A parsed and fully resolved experiment document.
struct StudyConfig {
    ExperimentConfig experiment;
    std::optional<HjmModel> hjm;
    SupermartingaleOptions supermartingale;
    std::vector<double> snapshots; // hjm-demo curve snapshot times
    std::string canonical;         // sorted-key serialization of the input document
    std::uint64_t hash = 0;        // FNV-1a 64 of `canonical`

    void override_seed(std::uint64_t seed);
    void set_workers(int workers);
};

/// Parses JSON text; throws ConfigValidationError listing every problem.
StudyConfig validate_config(std::string_view text);
StudyConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the sorted-key serialization; invariant under key reordering.
std::uint64_t config_hash(std::string_view json_text);

void write_errors_csv(std::ostream& out, const ErrorReport& report);
void write_summary_csv(std::ostream& out, const ErrorReport& report);
void write_supermartingale_csv(std::ostream& out, const SupermartingaleReport& report);

/// Convergence study written to `out_dir` as errors.csv and summary.csv.
/// The report is returned even when a fit is inconclusive.
ErrorReport run_convergence(const StudyConfig& config, const std::filesystem::path& out_dir);
SupermartingaleReport run_supermartingale(const StudyConfig& config, const std::filesystem::path& out_dir);
/// Curve snapshots of one NV path plus the bond-payoff convergence table.
ErrorReport run_hjm_demo(const StudyConfig& config, const std::filesystem::path& out_dir, bool debug_norms);

struct SelftestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Quick invariant suite over all modules.
std::vector<SelftestResult> run_selftest();

enum class Command { Convergence, Supermartingale, HjmDemo, ListModels, Selftest };

std::optional<Command> parse_command(std::string_view name);

struct RunOptions {
    std::filesystem::path config;
    std::filesystem::path out = "out";
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool debug_hjm_norm = false;
};

/// Dispatches a command, writes manifest.json before any result and error.json
/// on failure, and returns the process exit status.
int run(Command command, const RunOptions& options, std::ostream& out, std::ostream& err);

} // namespace nvsplit
