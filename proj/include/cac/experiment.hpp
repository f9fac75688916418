#ifndef CAC_EXPERIMENT_HPP
#define CAC_EXPERIMENT_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cac/metrics.hpp"

#include <json.hpp>

namespace cac::exp {

using Config = nlohmann::ordered_json;

/// Every recognised key with its default value. The document doubles as the schema:
/// a key absent here is rejected, and a value must have the default's type.
Config default_config();

/// Merges `overlay` onto `base`, rejecting unknown keys and type changes.
/// `where` prefixes error messages with the dotted location.
void merge_config(Config& base, const nlohmann::json& overlay, const std::string& where = "");

/// Applies "dotted.key=value"; the value is read as JSON when it parses, else as a string.
void apply_override(Config& config, const std::string& assignment);

/// Semantic checks (ranges, enums, sweep axes). Throws ConfigInvalid.
void validate_config(const Config& config);

/// Defaults, then the optional file, then overrides, then the seed list; validated.
Config load_config(const std::string& path, const std::vector<std::string>& overrides,
                   const std::optional<std::vector<std::uint64_t>>& seeds);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// One point of a sweep grid: (dotted key, value) pairs in axis order.
struct GridPoint {
    std::vector<std::pair<std::string, nlohmann::json>> values;
    /// Directory-safe label, e.g. "ics=0.5,k=2"; the method name for single runs.
    std::string key;
};

/// Cartesian product of sweep.axes in declaration order (last axis fastest).
std::vector<GridPoint> expand_grid(const Config& config);

/// Methods: "cac", "km+x", "x", "deepcac", "km-z".
struct RunResult {
    EvalReport report;
    nlohmann::ordered_json document;
    nlohmann::json model;
    double seconds = 0.0;
};

/// One method on one seed. The seed drives data generation, the split and the model.
RunResult execute_run(const Config& config, const std::string& method, std::uint64_t seed,
                      const std::string& dataset_label);

/// Runs `jobs` workers over [0, n); fn(i) must only touch slot i.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Executes task "synth", "fit-cac", "fit-deepcac", "baseline" or "sweep" and writes
/// the output tree under out_dir. Returns the number of runs.
int run_task(const std::string& task, const Config& config, const std::string& out_dir, int jobs,
             std::ostream& log);

/// Reports from a report.json file or every report.json below a directory (sorted paths).
std::vector<EvalReport> load_reports(const std::string& path);

struct ComparisonRow {
    std::string dataset;
    std::string method;
    int k = 0;
    /// Index of the input set the row came from.
    int side = 0;
    int seeds = 0;
    double auc = 0.0;
    double auprc = 0.0;
    double f1 = 0.0;
    /// Mean paired differences against the reference row on shared seeds.
    double delta_auc = 0.0;
    double delta_auprc = 0.0;
    double delta_f1 = 0.0;
    /// Shared seeds where this row's AUC is strictly higher than the reference's.
    int wins = 0;
    int paired = 0;
    std::string reference;
};

/// With several sets, each row is compared against the same (dataset, method, k) of set 0.
/// With one set, rows are compared against `reference` (default: the first method seen)
/// on the same (dataset, k).
std::vector<ComparisonRow> compare_reports(const std::vector<std::vector<EvalReport>>& sets,
                                           const std::optional<std::string>& reference);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string comparison_table(const std::vector<ComparisonRow>& rows);

/// git-describe-style version string baked in at build time.
std::string version();

}  // namespace cac::exp

#endif  // CAC_EXPERIMENT_HPP
