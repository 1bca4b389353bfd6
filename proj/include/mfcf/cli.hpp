#pragma once

#include "mfcf/data.hpp"
#include "mfcf/harness.hpp"
#include "mfcf/model.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfcf::cli {

enum ExitCode : int {
    kOk = 0,
    kInternalError = 1,
    kUsageError = 2,  // bad arguments or config file
    kIoError = 3,     // unreadable or malformed input, unwritable output
    kDiverged = 4,
    kPartialFailure = 5,  // benchmark finished but some model failed
};

struct DatasetSpec {
    std::string name;
    std::string path;
    DatasetFormat format;
};

/// Contents of a run config file (schema_version 1). Command-line flags
/// override the scalar fields after parsing.
struct RunConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<ModelKind> models{std::begin(kAllModels), std::end(kAllModels)};
    Grid grid;
    std::map<ModelKind, Grid> model_grids;  // per-model replacement of `grid`
    std::size_t folds = 4;
    std::uint64_t seed = 42;
    std::size_t max_n = 10;
    Sampling sampling;
    ModelConfig model;  // single-config commands (train, evaluate)
    std::string output_directory = "results";
    bool write_csv = true;
    bool write_json = true;

    ExperimentPlan plan_for(ModelKind kind) const;
};

/// Parses a config document; throws ConfigError on schema violations.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

/// A preset name (optionally with a path override) or a file path read with
/// `format_preset`.
DatasetSpec resolve_dataset(const std::string& name_or_path, const std::string& format_preset);

/// Entry point for the mfcf executable. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mfcf::cli
