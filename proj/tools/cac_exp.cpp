// Command-line front end for the CAC / DeepCAC experiments.

#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cac/experiment.hpp"
#include "cac/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunFlags {
    std::string config;
    std::string out;
    std::string seeds;
    int jobs = 0;
    std::vector<std::string> sets;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--out", f.out, "output directory")->required();
    cmd->add_option("--seed", f.seeds, "comma-separated seeds, e.g. 0,1,2");
    cmd->add_option("--jobs", f.jobs, "worker threads (default: hardware concurrency)");
    cmd->add_option("--set", f.sets, "override key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAC / DeepCAC experiment runner"};
    app.set_version_flag("--version", cac::exp::version());
    app.require_subcommand(1);

    RunFlags flags;
    const std::vector<std::pair<std::string, std::string>> tasks{
        {"synth", "generate synthetic datasets"},
        {"fit-cac", "fit and evaluate CAC"},
        {"fit-deepcac", "fit and evaluate DeepCAC"},
        {"baseline", "fit and evaluate baselines"},
        {"sweep", "run a parameter grid"},
    };
    for (const auto& [name, help] : tasks) add_run_flags(app.add_subcommand(name, help), flags);

    std::vector<std::string> report_paths;
    std::string reference, compare_out;
    auto* compare = app.add_subcommand("compare", "compare report sets");
    compare->add_option("reports", report_paths, "report files or run directories (one set each)")->required();
    compare->add_option("--reference", reference, "reference method when a single set is given");
    compare->add_option("--out", compare_out, "directory for comparison.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (compare->parsed()) {
            std::vector<std::vector<cac::EvalReport>> sets;
            for (const auto& p : report_paths) sets.push_back(cac::exp::load_reports(p));
            const auto rows = cac::exp::compare_reports(
                sets, reference.empty() ? std::nullopt : std::optional<std::string>(reference));
            std::cout << cac::exp::comparison_table(rows);
            if (!compare_out.empty()) cac::write_file(compare_out + "/comparison.csv", cac::exp::comparison_csv(rows));
            return 0;
        }

        const std::string task = app.get_subcommands().front()->get_name();
        std::optional<std::vector<std::uint64_t>> seeds;
        if (!flags.seeds.empty()) seeds = cac::exp::parse_seed_list(flags.seeds);
        cac::exp::Config config = cac::exp::load_config(flags.config, flags.sets, seeds);
        const auto declared = config["task"].get<std::string>();
        if (!declared.empty() && declared != task) {
            throw cac::Error(cac::ErrorCode::ConfigInvalid,
                             "task: config declares '" + declared + "' but the command is '" + task + "'");
        }
        config["task"] = task;
        const int jobs = flags.jobs > 0 ? flags.jobs : std::max(1u, std::thread::hardware_concurrency());
        const int runs = cac::exp::run_task(task, config, flags.out, jobs, std::cerr);
        std::cerr << runs << " run(s) written to " << flags.out << '\n';
        return 0;
    } catch (const cac::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == cac::ErrorCode::ConfigInvalid ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
