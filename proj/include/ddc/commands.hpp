#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ddc {

// Exit codes shared by the commands.
enum ExitCode { kExitOk = 0, kExitError = 1, kExitInvalidConfig = 2, kExitAuditFailed = 3 };

// Runs the configured scenario and writes steps.csv, meta.json, config.yaml and
// plot.py under out_dir.
int cmd_run(const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed,
            std::ostream& out, std::ostream& err);

// One run per value of the named parameter, up to `workers` at a time, each in
// out_dir/<param>=<value>/; aggregated results in out_dir/sweep.csv.
int cmd_sweep(const std::string& config, const std::string& param, const std::string& values_csv,
              const std::string& out_dir, int workers, std::ostream& out, std::ostream& err);

// Re-runs the invariant audits on a stored run directory.
int cmd_verify(const std::string& log_dir, std::ostream& out, std::ostream& err);

}  // namespace ddc
