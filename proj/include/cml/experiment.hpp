#pragma once

#include <cstddef>
#include <string>

#include "cml/json_io.hpp"

namespace cml {

// Fully formatted output of one experiment run: the file body (CSV for the
// grid experiments, a line report for `check`) and the aggregated pass flag
// that drives the process exit code.
struct run_output {
    std::string text;
    bool all_pass = true;
};

run_output run_exact(const experiment_config& cfg);
run_output run_scan(const experiment_config& cfg);
run_output run_mc(const experiment_config& cfg, std::size_t threads);
run_output run_partition(const experiment_config& cfg, std::size_t threads);
run_output run_check(const experiment_config& cfg);

// Dispatch on cfg.kind.
run_output run_experiment(const experiment_config& cfg, std::size_t threads);

} // namespace cml
