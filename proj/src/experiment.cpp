#include "cac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cac/dataset.hpp"
#include "cac/io.hpp"
#include "cac/pipeline.hpp"

#ifndef CAC_VERSION
#define CAC_VERSION "0.1.0-unknown"
#endif

namespace cac::exp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& reason) {
    throw Error(ErrorCode::ConfigInvalid, field + ": " + reason);
}

const std::set<std::string> kTasks{"synth", "fit-cac", "fit-deepcac", "baseline", "sweep"};
const std::set<std::string> kMethods{"cac", "km+x", "x", "deepcac", "km-z"};
const std::set<std::string> kBaselines{"km+x", "x", "km-z"};

std::string join_path(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

std::vector<std::string> split_dotted(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream in(path);
    for (std::string part; std::getline(in, part, '.');) parts.push_back(part);
    return parts;
}

bool same_kind(const Config& schema, const json& value) {
    if (schema.is_number_float()) return value.is_number();
    if (schema.is_number_integer()) return value.is_number_integer();
    if (schema.is_string()) return value.is_string();
    if (schema.is_boolean()) return value.is_boolean();
    if (schema.is_array()) {
        if (!value.is_array()) return false;
        if (schema.empty()) return true;
        return std::all_of(value.begin(), value.end(), [&](const json& v) { return same_kind(schema.front(), v); });
    }
    return false;
}

/// Leaf of the default schema at `path`, or nullptr.
const Config* schema_leaf(const Config& schema, const std::string& path) {
    const Config* node = &schema;
    for (const auto& part : split_dotted(path)) {
        if (!node->is_object() || !node->contains(part)) return nullptr;
        node = &(*node)[part];
    }
    return node->is_object() ? nullptr : node;
}

Config& node_at(Config& config, const std::string& path) {
    Config* node = &config;
    for (const auto& part : split_dotted(path)) node = &(*node)[part];
    return *node;
}

std::string format_value(const json& v) {
    if (v.is_number_float()) return format_real(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string short_name(const std::string& path) {
    const auto parts = split_dotted(path);
    return parts.empty() ? path : parts.back();
}

/// Column labels for the sweep axes: the last path segment unless it is ambiguous.
std::vector<std::string> axis_labels(const Config& config) {
    std::vector<std::string> names;
    const auto& axes = config.at("sweep").at("axes");
    for (auto it = axes.begin(); it != axes.end(); ++it) names.push_back(it.key());
    std::map<std::string, int> count;
    for (const auto& n : names) ++count[short_name(n)];
    for (auto& n : names)
        if (count[short_name(n)] == 1) n = short_name(n);
    return names;
}

/// Error text without the leading "<Code>: " added by cac::Error.
std::string message_of(const Error& e) {
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    const std::string what = e.what();
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

std::string timestamp_utc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }
std::string dump(const Config& doc) { return doc.dump(2) + "\n"; }

}  // namespace

Config default_config() {
    Config c;
    c["version"] = 1;
    c["task"] = "";
    c["seeds"] = std::vector<std::uint64_t>{0};
    c["dataset"] = {{"source", "synthetic"},
                    {"name", "synthetic"},
                    {"csv", ""},
                    {"label_column", "y"},
                    {"has_header", true},
                    {"synthetic",
                     {{"n_samples", 2000},
                      {"n_features", 10},
                      {"natural_clusters", 2},
                      {"ics", 1.0},
                      {"ocs", 2.0},
                      {"nonlinear_labels", false}}}};
    c["split"] = {{"train", 0.57}, {"val", 0.18}, {"test", 0.25}, {"stratified", true}};
    c["classifier"] = {{"kind", "logreg"},   {"lr", 0.1},          {"l2", 1e-4},
                       {"epochs", 500},      {"k_neighbors", 5},   {"ridge_lambda", 1.0}};
    c["cac"] = {{"k", 2}, {"alphas", {0.01, 0.05, 0.5, 2.5, 3.0}}, {"max_rounds", 100}};
    c["deepcac"] = {{"hidden", {64}},
                    {"latent", 32},
                    {"k", 3},
                    {"alpha", 5.0},
                    {"beta", 20.0},
                    {"delta", 1.0},
                    {"scale", 30.0},
                    {"margin", 0.35},
                    {"lr", 2e-3},
                    {"batch_size", 128},
                    {"pretrain_epochs", 50},
                    {"cluster_epochs", 50},
                    {"local_hidden", 30},
                    {"local_lr", 0.3},
                    {"local_epochs", 200},
                    {"patience", 10}};
    c["baseline"] = {{"methods", {"km+x", "x"}}, {"k", 2}};
    c["sweep"] = {{"method", "cac"}, {"axes", Config::object()}, {"max_runs", 10000}};
    c["output"] = {{"save_models", true}};
    return c;
}

void merge_config(Config& base, const json& overlay, const std::string& where) {
    if (!overlay.is_object()) invalid(where.empty() ? "<root>" : where, "expected an object");
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        const std::string field = join_path(where, it.key());
        if (field == "sweep.axes") {
            if (!it.value().is_object()) invalid(field, "expected an object of axis -> values");
            base[it.key()] = it.value();
            continue;
        }
        if (!base.contains(it.key())) invalid(field, "unknown key");
        Config& target = base[it.key()];
        if (target.is_object()) {
            merge_config(target, it.value(), field);
        } else if (!same_kind(target, it.value())) {
            invalid(field, "expected " + std::string(target.type_name()) + ", got " + it.value().type_name());
        } else if (target.is_number_float()) {
            target = it.value().get<double>();
        } else {
            target = it.value();
        }
    }
}

void apply_override(Config& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) invalid(assignment, "override must look like key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    if (key.rfind("sweep.axes.", 0) == 0) {
        const std::string axis = key.substr(std::string("sweep.axes.").size());
        if (!value.is_array()) value = json::array({value});
        config["sweep"]["axes"][axis] = value;
        return;
    }
    const Config* leaf = schema_leaf(config, key);
    if (leaf == nullptr) invalid(key, "unknown key");
    if (leaf->is_string()) value = text;

    json overlay = value;
    const auto parts = split_dotted(key);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) overlay = json{{*it, overlay}};
    merge_config(config, overlay);
}

void validate_config(const Config& c) {
    if (c.at("version").get<int>() != 1) invalid("version", "only version 1 is supported");
    const auto task = c.at("task").get<std::string>();
    if (!task.empty() && kTasks.count(task) == 0) invalid("task", "unknown task '" + task + "'");
    if (c.at("seeds").empty()) invalid("seeds", "at least one seed is required");
    for (const auto& s : c.at("seeds"))
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0) invalid("seeds", "seeds must be nonnegative integers");

    const auto& ds = c.at("dataset");
    const auto source = ds.at("source").get<std::string>();
    if (source != "synthetic" && source != "csv") invalid("dataset.source", "expected 'synthetic' or 'csv'");
    if (source == "csv" && ds.at("csv").get<std::string>().empty()) invalid("dataset.csv", "path required");
    const auto& syn = ds.at("synthetic");
    if (syn.at("n_samples").get<int>() < 8) invalid("dataset.synthetic.n_samples", "must be >= 8");
    if (syn.at("n_features").get<int>() < 1) invalid("dataset.synthetic.n_features", "must be >= 1");
    if (syn.at("natural_clusters").get<int>() < 1) invalid("dataset.synthetic.natural_clusters", "must be >= 1");
    if (syn.at("ics").get<double>() < 0.0) invalid("dataset.synthetic.ics", "must be >= 0");
    if (syn.at("ocs").get<double>() < 0.0) invalid("dataset.synthetic.ocs", "must be >= 0");

    const auto& sp = c.at("split");
    const double tr = sp.at("train").get<double>(), va = sp.at("val").get<double>(), te = sp.at("test").get<double>();
    if (tr <= 0.0 || va < 0.0 || te <= 0.0) invalid("split", "train and test fractions must be positive");
    if (std::abs(tr + va + te - 1.0) > 1e-9) invalid("split", "fractions must sum to 1");

    try {
        ClassifierSpec spec;
        spec.kind = classifier_kind_from_string(c.at("classifier").at("kind").get<std::string>());
        spec.learning_rate = c.at("classifier").at("lr").get<double>();
        spec.l2_penalty = c.at("classifier").at("l2").get<double>();
        spec.epochs = c.at("classifier").at("epochs").get<int>();
        spec.k_neighbors = c.at("classifier").at("k_neighbors").get<int>();
        spec.ridge_lambda = c.at("classifier").at("ridge_lambda").get<double>();
        spec.validate();
    } catch (const Error& e) {
        invalid("classifier", message_of(e));
    }

    const auto& cac = c.at("cac");
    if (cac.at("k").get<int>() < 1) invalid("cac.k", "must be >= 1");
    if (cac.at("alphas").empty()) invalid("cac.alphas", "at least one candidate is required");
    for (const auto& a : cac.at("alphas"))
        if (a.get<double>() < 0.0) invalid("cac.alphas", "must be >= 0");
    if (cac.at("max_rounds").get<int>() < 1) invalid("cac.max_rounds", "must be >= 1");

    const auto& deep = c.at("deepcac");
    try {
        DeepCacConfig dc;
        dc.hidden = deep.at("hidden").get<std::vector<int>>();
        dc.latent = deep.at("latent").get<int>();
        dc.k = deep.at("k").get<int>();
        dc.weights = {deep.at("alpha").get<double>(), deep.at("beta").get<double>(), deep.at("delta").get<double>()};
        dc.scale = deep.at("scale").get<double>();
        dc.margin = deep.at("margin").get<double>();
        dc.lr = deep.at("lr").get<double>();
        dc.batch_size = deep.at("batch_size").get<int>();
        dc.pretrain_epochs = deep.at("pretrain_epochs").get<int>();
        dc.cluster_epochs = deep.at("cluster_epochs").get<int>();
        dc.local_hidden = deep.at("local_hidden").get<int>();
        dc.local_lr = deep.at("local_lr").get<double>();
        dc.local_epochs = deep.at("local_epochs").get<int>();
        dc.patience = deep.at("patience").get<int>();
        dc.validate();
    } catch (const Error& e) {
        invalid("deepcac", message_of(e));
    }

    const auto& base = c.at("baseline");
    if (base.at("methods").empty()) invalid("baseline.methods", "at least one method is required");
    for (const auto& m : base.at("methods"))
        if (kBaselines.count(m.get<std::string>()) == 0) invalid("baseline.methods", "unknown method " + m.dump());
    if (base.at("k").get<int>() < 1) invalid("baseline.k", "must be >= 1");

    const auto& sweep = c.at("sweep");
    if (kMethods.count(sweep.at("method").get<std::string>()) == 0) invalid("sweep.method", "unknown method");
    const Config schema = default_config();
    std::size_t grid = 1;
    for (auto it = sweep.at("axes").begin(); it != sweep.at("axes").end(); ++it) {
        const std::string field = "sweep.axes." + it.key();
        const std::string root = split_dotted(it.key()).front();
        if (root == "sweep" || root == "seeds" || root == "task" || root == "version" || root == "output") {
            invalid(field, "this key cannot be swept");
        }
        const Config* leaf = schema_leaf(schema, it.key());
        if (leaf == nullptr) invalid(field, "unknown key");
        if (!it.value().is_array() || it.value().empty()) invalid(field, "expected a nonempty list of values");
        for (const auto& v : it.value())
            if (!same_kind(*leaf, v)) invalid(field, "value " + v.dump() + " has the wrong type");
        grid *= it.value().size();
    }
    if (grid * c.at("seeds").size() > sweep.at("max_runs").get<std::size_t>()) {
        invalid("sweep.max_runs", "grid of " + std::to_string(grid * c.at("seeds").size()) + " runs exceeds the cap");
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream in(text);
    for (std::string part; std::getline(in, part, ',');) {
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
            invalid("seeds", "'" + text + "' is not a comma-separated list of nonnegative integers");
        }
        seeds.push_back(std::stoull(part));
    }
    if (seeds.empty()) invalid("seeds", "empty seed list");
    return seeds;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides,
                   const std::optional<std::vector<std::uint64_t>>& seeds) {
    Config config = default_config();
    if (!path.empty()) {
        if (!fs::exists(path)) invalid("--config", "file '" + path + "' does not exist");
        const json doc = json::parse(read_file(path), nullptr, false);
        if (doc.is_discarded()) invalid("--config", "'" + path + "' is not valid JSON");
        merge_config(config, doc);
    }
    for (const auto& o : overrides) apply_override(config, o);
    if (seeds) config["seeds"] = *seeds;
    validate_config(config);
    return config;
}

std::vector<GridPoint> expand_grid(const Config& config) {
    const auto& axes = config.at("sweep").at("axes");
    std::vector<std::string> names;
    for (auto it = axes.begin(); it != axes.end(); ++it) names.push_back(it.key());
    const std::vector<std::string> labels = axis_labels(config);

    std::vector<GridPoint> points{GridPoint{}};
    for (const auto& name : names) {
        std::vector<GridPoint> next;
        for (const auto& p : points) {
            for (const auto& v : axes.at(name)) {
                GridPoint q = p;
                q.values.emplace_back(name, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    for (auto& p : points) {
        std::string key;
        for (std::size_t a = 0; a < p.values.size(); ++a) {
            if (!key.empty()) key += ',';
            key += labels[a] + "=" + format_value(p.values[a].second);
        }
        std::replace(key.begin(), key.end(), '/', '_');
        p.key = key.empty() ? "default" : key;
    }
    return points;
}

namespace {

LabeledDataset build_dataset(const Config& c, std::uint64_t seed) {
    const auto& ds = c.at("dataset");
    if (ds.at("source").get<std::string>() == "csv") {
        const auto path = ds.at("csv").get<std::string>();
        if (!fs::exists(path)) invalid("dataset.csv", "file '" + path + "' does not exist");
        return load_csv(path, ds.at("label_column").get<std::string>(), ds.at("has_header").get<bool>());
    }
    const auto& syn = ds.at("synthetic");
    SyntheticSpec spec;
    spec.n_samples = syn.at("n_samples").get<int>();
    spec.n_features = syn.at("n_features").get<int>();
    spec.natural_clusters = syn.at("natural_clusters").get<int>();
    spec.ics = syn.at("ics").get<double>();
    spec.ocs = syn.at("ocs").get<double>();
    spec.nonlinear_labels = syn.at("nonlinear_labels").get<bool>();
    spec.seed = seed;
    return make_classification(spec);
}

ClassifierSpec classifier_spec(const Config& c) {
    const auto& s = c.at("classifier");
    ClassifierSpec spec;
    spec.kind = classifier_kind_from_string(s.at("kind").get<std::string>());
    spec.learning_rate = s.at("lr").get<double>();
    spec.l2_penalty = s.at("l2").get<double>();
    spec.epochs = s.at("epochs").get<int>();
    spec.k_neighbors = s.at("k_neighbors").get<int>();
    spec.ridge_lambda = s.at("ridge_lambda").get<double>();
    return spec;
}

DeepCacConfig deepcac_config(const Config& c, std::uint64_t seed, bool clustering_stage) {
    const auto& d = c.at("deepcac");
    DeepCacConfig dc;
    dc.hidden = d.at("hidden").get<std::vector<int>>();
    dc.latent = d.at("latent").get<int>();
    dc.k = d.at("k").get<int>();
    dc.weights = {d.at("alpha").get<double>(), d.at("beta").get<double>(), d.at("delta").get<double>()};
    dc.scale = d.at("scale").get<double>();
    dc.margin = d.at("margin").get<double>();
    dc.lr = d.at("lr").get<double>();
    dc.batch_size = d.at("batch_size").get<int>();
    dc.pretrain_epochs = d.at("pretrain_epochs").get<int>();
    dc.cluster_epochs = d.at("cluster_epochs").get<int>();
    dc.local_hidden = d.at("local_hidden").get<int>();
    dc.local_lr = d.at("local_lr").get<double>();
    dc.local_epochs = d.at("local_epochs").get<int>();
    dc.patience = d.at("patience").get<int>();
    dc.seed = seed;
    dc.clustering_stage = clustering_stage;
    return dc;
}

}  // namespace

RunResult execute_run(const Config& config, const std::string& method, std::uint64_t seed,
                      const std::string& dataset_label) {
    const auto start = std::chrono::steady_clock::now();
    const LabeledDataset ds = build_dataset(config, seed);
    const auto& sp = config.at("split");
    SplitSpec split_spec{sp.at("train").get<double>(), sp.at("val").get<double>(), sp.at("test").get<double>(),
                         seed, sp.at("stratified").get<bool>()};
    const PreparedData data = prepare(ds, split_spec);
    const ClassifierSpec clf = classifier_spec(config);

    MethodRun run;
    if (method == "cac") {
        CacRunOptions options;
        options.k = config.at("cac").at("k").get<int>();
        options.alphas = config.at("cac").at("alphas").get<std::vector<double>>();
        options.max_rounds = config.at("cac").at("max_rounds").get<int>();
        options.classifier = clf;
        options.seed = seed;
        run = run_cac(data, options);
    } else if (method == "km+x") {
        run = run_cluster_then_predict(data, config.at("baseline").at("k").get<int>(), clf, seed);
    } else if (method == "x") {
        run = run_classifier(data, clf);
    } else if (method == "deepcac" || method == "km-z") {
        run = run_deepcac(data, deepcac_config(config, seed, method == "deepcac"));
    } else {
        invalid("method", "unknown method '" + method + "'");
    }
    run.report.dataset = dataset_label;
    run.report.seed = seed;

    RunResult out;
    out.report = run.report;
    out.document = run.report.to_json();
    out.document["diagnostics"] = run.diagnostics;
    out.model = std::move(run.model);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

int run_task(const std::string& task, const Config& config, const std::string& out_dir, int jobs,
             std::ostream& log) {
    if (kTasks.count(task) == 0) invalid("task", "unknown task '" + task + "'");
    const auto wall_start = std::chrono::steady_clock::now();
    const auto started = std::chrono::system_clock::now();
    const fs::path out(out_dir);
    fs::create_directories(out);
    const auto seeds = config.at("seeds").get<std::vector<std::uint64_t>>();

    nlohmann::ordered_json manifest;
    manifest["tool"] = "cac-exp";
    manifest["version"] = version();
    manifest["task"] = task;
    manifest["config"] = config;
    manifest["jobs"] = jobs;
    manifest["started_at"] = timestamp_utc(started);
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();

    int run_count = 0;
    if (task == "synth") {
        for (auto seed : seeds) {
            const LabeledDataset ds = build_dataset(config, seed);
            const std::string rel = "data/seed-" + std::to_string(seed) + ".csv";
            write_csv(ds, (out / rel).string());
            entries.push_back({{"seed", seed}, {"path", rel}, {"rows", ds.rows()}});
            log << "wrote " << (out / rel).string() << " (" << ds.rows() << " rows)\n";
            ++run_count;
        }
    } else {
        std::vector<GridPoint> points;
        std::vector<std::string> methods;
        if (task == "sweep") {
            points = expand_grid(config);
            methods.assign(points.size(), config.at("sweep").at("method").get<std::string>());
        } else if (task == "baseline") {
            for (const auto& m : config.at("baseline").at("methods")) {
                points.push_back(GridPoint{{}, m.get<std::string>()});
                methods.push_back(m.get<std::string>());
            }
        } else {
            const std::string m = task == "fit-cac" ? "cac" : "deepcac";
            points.push_back(GridPoint{{}, m});
            methods.push_back(m);
        }
        const std::string name = config.at("dataset").at("name").get<std::string>();

        struct Slot {
            std::size_t point = 0;
            std::uint64_t seed = 0;
            RunResult result;
            std::exception_ptr error;
        };
        std::vector<Slot> slots;
        for (std::size_t p = 0; p < points.size(); ++p)
            for (auto seed : seeds) slots.push_back(Slot{p, seed, {}, nullptr});

        const bool save_models = config.at("output").at("save_models").get<bool>();
        parallel_for(slots.size(), jobs, [&](std::size_t i) {
            Slot& slot = slots[i];
            const GridPoint& point = points[slot.point];
            try {
                Config local = config;
                for (const auto& [key, value] : point.values) node_at(local, key) = value;
                const std::string label = task == "sweep" ? name + "@" + point.key : name;
                slot.result = execute_run(local, methods[slot.point], slot.seed, label);
                nlohmann::ordered_json params = nlohmann::ordered_json::object();
                for (const auto& [key, value] : point.values) params[key] = value;
                slot.result.document["params"] = params;
                const std::string seed_dir = std::to_string(slot.seed);
                write_file((out / "runs" / point.key / seed_dir / "report.json").string(),
                           dump(slot.result.document));
                if (save_models) {
                    write_file((out / "models" / point.key / (seed_dir + ".json")).string(), dump(slot.result.model));
                }
            } catch (...) {
                slot.error = std::current_exception();
            }
        });

        for (const auto& slot : slots) {
            if (!slot.error) continue;
            const std::string context = "run " + points[slot.point].key + "/" + std::to_string(slot.seed) + ": ";
            try {
                std::rethrow_exception(slot.error);
            } catch (const Error& e) {
                throw Error(e.code(), context + message_of(e));
            } catch (const std::exception& e) {
                throw std::runtime_error(context + e.what());
            }
        }

        const std::vector<std::string> axis_names = task == "sweep" ? axis_labels(config) : std::vector<std::string>{};
        std::ostringstream csv;
        for (const auto& a : axis_names) csv << a << ',';
        csv << EvalReport::csv_header() << '\n';
        for (const auto& slot : slots) {
            for (const auto& [key, value] : points[slot.point].values) csv << format_value(value) << ',';
            csv << slot.result.report.csv_row() << '\n';
            entries.push_back({{"key", points[slot.point].key},
                               {"seed", slot.seed},
                               {"report", "runs/" + points[slot.point].key + "/" + std::to_string(slot.seed) +
                                              "/report.json"},
                               {"seconds", slot.result.seconds}});
            log << points[slot.point].key << " seed " << slot.seed << ": auc " << format_real(slot.result.report.auc)
                << " auprc " << format_real(slot.result.report.auprc) << " f1 " << format_real(slot.result.report.f1)
                << '\n';
        }
        write_file((out / "sweep.csv").string(), csv.str());
        run_count = static_cast<int>(slots.size());
    }

    manifest["runs"] = entries;
    manifest["finished_at"] = timestamp_utc(std::chrono::system_clock::now());
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    write_file((out / "manifest.json").string(), dump(manifest));
    return run_count;
}

std::vector<EvalReport> load_reports(const std::string& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::Io, "'" + path + "' does not exist");
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::recursive_directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().filename() == "report.json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<EvalReport> out;
    for (const auto& f : files) {
        const json doc = json::parse(read_file(f), nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::SchemaMismatch, "'" + f + "' is not a report");
        out.push_back(EvalReport::from_json(doc));
    }
    return out;
}

namespace {

struct Group {
    std::string dataset;
    std::string method;
    int k = 0;
    int side = 0;
    std::map<std::uint64_t, const EvalReport*> by_seed;
};

}  // namespace

std::vector<ComparisonRow> compare_reports(const std::vector<std::vector<EvalReport>>& sets,
                                           const std::optional<std::string>& reference) {
    std::vector<Group> groups;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (const auto& r : sets[s]) {
            auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
                return g.side == static_cast<int>(s) && g.dataset == r.dataset && g.method == r.method && g.k == r.k;
            });
            if (it == groups.end()) {
                groups.push_back(Group{r.dataset, r.method, r.k, static_cast<int>(s), {}});
                it = std::prev(groups.end());
            }
            it->by_seed[r.seed] = &r;
        }
    }
    if (groups.empty()) throw Error(ErrorCode::SchemaMismatch, "no reports to compare");
    const std::string ref_method = reference.value_or(groups.front().method);
    if (sets.size() == 1 && std::none_of(groups.begin(), groups.end(), [&](const Group& g) { return g.method == ref_method; })) {
        throw Error(ErrorCode::SchemaMismatch, "reference method '" + ref_method + "' not found");
    }

    auto find_reference = [&](const Group& g) -> const Group* {
        const Group* fallback = nullptr;
        for (const auto& h : groups) {
            if (sets.size() > 1) {
                if (h.side == 0 && h.dataset == g.dataset && h.method == g.method && h.k == g.k) return &h;
            } else if (h.dataset == g.dataset && h.method == ref_method) {
                if (h.k == g.k) return &h;
                if (fallback == nullptr) fallback = &h;
            }
        }
        return fallback;
    };

    std::vector<ComparisonRow> rows;
    for (const auto& g : groups) {
        ComparisonRow row;
        row.dataset = g.dataset;
        row.method = g.method;
        row.k = g.k;
        row.side = g.side;
        row.seeds = static_cast<int>(g.by_seed.size());
        for (const auto& [seed, r] : g.by_seed) {
            row.auc += r->auc / row.seeds;
            row.auprc += r->auprc / row.seeds;
            row.f1 += r->f1 / row.seeds;
        }
        if (const Group* ref = find_reference(g)) {
            row.reference = ref->method + (sets.size() > 1 ? "@0" : "") + (ref->k != g.k ? " (k=" + std::to_string(ref->k) + ")" : "");
            for (const auto& [seed, r] : g.by_seed) {
                const auto it = ref->by_seed.find(seed);
                if (it == ref->by_seed.end()) continue;
                ++row.paired;
                row.delta_auc += r->auc - it->second->auc;
                row.delta_auprc += r->auprc - it->second->auprc;
                row.delta_f1 += r->f1 - it->second->f1;
                row.wins += r->auc > it->second->auc ? 1 : 0;
            }
            if (row.paired > 0) {
                row.delta_auc /= row.paired;
                row.delta_auprc /= row.paired;
                row.delta_f1 /= row.paired;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << "dataset,method,k,side,seeds,auc,auprc,f1,reference,paired,delta_auc,delta_auprc,delta_f1,wins\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.method << ',' << r.k << ',' << r.side << ',' << r.seeds << ','
            << format_real(r.auc) << ',' << format_real(r.auprc) << ',' << format_real(r.f1) << ',' << r.reference
            << ',' << r.paired << ',' << format_real(r.delta_auc) << ',' << format_real(r.delta_auprc) << ','
            << format_real(r.delta_f1) << ',' << r.wins << '\n';
    }
    return out.str();
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "dataset" << std::setw(16) << "method" << std::setw(4) << "k"
        << std::setw(5) << "set" << std::right << std::setw(6) << "seeds" << std::setw(9) << "auc" << std::setw(9)
        << "auprc" << std::setw(9) << "f1" << std::setw(10) << "d_auc" << std::setw(10) << "d_auprc"
        << std::setw(8) << "wins" << "  reference\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& r : rows) {
        out << std::left << std::setw(28) << r.dataset << std::setw(16) << r.method << std::setw(4) << r.k
            << std::setw(5) << r.side << std::right << std::setw(6) << r.seeds << std::setw(9) << r.auc
            << std::setw(9) << r.auprc << std::setw(9) << r.f1 << std::showpos << std::setw(10) << r.delta_auc
            << std::setw(10) << r.delta_auprc << std::noshowpos << std::setw(8)
            << (std::to_string(r.wins) + "/" + std::to_string(r.paired)) << "  " << (r.reference.empty() ? "-" : r.reference)
            << '\n';
    }
    return out.str();
}

std::string version() { return CAC_VERSION; }

}  // namespace cac::exp
