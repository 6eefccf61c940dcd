#pragma once

#include <string>
#include <vector>

#include "sfcl/config.hpp"
#include "sfcl/metrics.hpp"

namespace sfcl {

struct RunResult {
    metrics::MetricSet final_metrics;
    std::vector<proto::RoundReport> reports;
};

// Full experiment: build the federation, run global_rounds protocol rounds,
// write rounds.csv / final.csv / labels_before_after/ (and the optional
// dataset dump) under out_dir. deterministic forces single-threaded kernels.
RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir,
                         bool deterministic, bool quiet = false);

// Aligned table of final metrics across completed runs; throws MissingRun if
// a directory lacks final.csv. Returns the table as CSV text.
std::string compare_modes(const std::vector<std::string>& run_dirs);

// rounds.csv column schema, fixed.
extern const char* const kRoundsHeader;

}  // namespace sfcl
