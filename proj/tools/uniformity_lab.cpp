// uniformity_lab: command-line front end for the uniformity library.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <toml.hpp>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "uniformity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uniformity;

namespace {

// ---------------------------------------------------------------------------
// Settings: every option is reachable as --flag-name and as the TOML key
// flag_name in the table of its subcommand (globals at top level).
// ---------------------------------------------------------------------------

struct Binding {
    std::string key;
    CLI::Option* opt = nullptr;
    std::function<void(const toml::node&)> from_toml;
    std::function<json()> to_json;
};

struct Section {
    std::string name;  // empty for globals
    std::vector<Binding> items;
};

std::string where(const Section& sec, const std::string& key) {
    return sec.name.empty() ? key : sec.name + "." + key;
}

template <typename T>
T scalar_from(const toml::node& n, const std::string& what) {
    if constexpr (std::is_same_v<T, bool>) {
        if (auto v = n.value<bool>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = n.value<std::string>()) return *v;
    } else if constexpr (std::is_floating_point_v<T>) {
        if (n.is_number())
            if (auto v = n.value<double>()) return *v;
    } else {
        if (n.is_integer()) {
            const auto v = *n.value<std::int64_t>();
            if (v < 0) throw ValidationError("config key '" + what + "' must be >= 0");
            return static_cast<T>(v);
        }
    }
    throw ValidationError("config key '" + what + "' has the wrong type");
}

template <typename T>
T value_from(const toml::node& n, const std::string& what) {
    if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>) {
        const auto* arr = n.as_array();
        if (!arr) throw ValidationError("config key '" + what + "' must be an array");
        T out;
        for (const auto& e : *arr) out.push_back(scalar_from<typename T::value_type>(e, what));
        return out;
    } else {
        return scalar_from<T>(n, what);
    }
}

template <typename T>
CLI::Option* add_setting(CLI::App* app, Section& sec, const std::string& key, T& var, const std::string& help) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>)
        opt = app->add_option(flag, var, help)->default_val(var ? "true" : "false");
    else
        opt = app->add_option(flag, var, help)->capture_default_str();
    if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>) opt->delimiter(',');
    const std::string what = where(sec, key);
    sec.items.push_back({key, opt, [&var, what](const toml::node& n) { var = value_from<T>(n, what); },
                         [&var]() { return json(var); }});
    return opt;
}

// Values not given on the command line are taken from the table; unknown
// keys are rejected for every table in the file.
void apply_table(const toml::table& table, Section& sec) {
    for (const auto& [k, node] : table) {
        const std::string key(k.str());
        auto it = std::find_if(sec.items.begin(), sec.items.end(), [&](const Binding& b) { return b.key == key; });
        if (it == sec.items.end()) {
            if (sec.name.empty() && node.is_table()) continue;  // subcommand table, checked separately
            throw ValidationError("unknown config key '" + where(sec, key) + "'");
        }
        if (it->opt->count() == 0) it->from_toml(node);
    }
}

json resolved(const Section& sec) {
    json j = json::object();
    for (const auto& b : sec.items) j[b.key] = b.to_json();
    return j;
}

// ---------------------------------------------------------------------------
// Output handling
// ---------------------------------------------------------------------------

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : ""; }

std::string opt_count(const std::optional<std::size_t>& x) { return x ? std::to_string(*x) : ""; }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Report files keyed by name, written together once the subcommand succeeds.
using Outputs = std::map<std::string, std::string>;

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    return "internal";
}

std::string error_line(const std::string& kind, const std::string& message) {
    return json{{"error", kind}, {"message", message}}.dump();
}

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct InputSettings {
    std::string input;
    std::size_t embed_dim = 64;
    std::uint64_t embed_seed = 0;
};

void bind_input(CLI::App* app, Section& sec, InputSettings& in) {
    add_setting(app, sec, "input", in.input, "Dataset: JSONL records (.jsonl) or vector CSV (.csv)");
    add_setting(app, sec, "embed_dim", in.embed_dim, "Embedding width for text records without vectors");
    add_setting(app, sec, "embed_seed", in.embed_seed, "Seed of the token hash embedding");
}

EmbeddedDataset load_dataset(const InputSettings& in) {
    if (in.input.empty()) throw ValidationError("no input dataset given (--input)");
    if (ends_with(in.input, ".csv")) return read_vectors(in.input);
    if (ends_with(in.input, ".jsonl")) {
        const auto records = load_jsonl(in.input);
        const std::size_t dim = record_dimension(records).value_or(in.embed_dim);
        return embed_average(records, dim, in.embed_seed);
    }
    throw ValidationError("input '" + in.input + "' must end in .jsonl or .csv");
}

// Sample CSV for training: a header naming each column x<i> (input) or y<i>
// (target), then one row per sample.
Samples read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line, field;
    if (!std::getline(in, line)) throw ParseError("line 1: missing header");
    std::vector<bool> is_x;
    {
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            if (field.empty() || (field[0] != 'x' && field[0] != 'y'))
                throw ParseError("line 1: columns must be named x<i> or y<i>, got '" + field + "'");
            is_x.push_back(field[0] == 'x');
        }
    }
    const auto dx = static_cast<std::size_t>(std::count(is_x.begin(), is_x.end(), true));
    const std::size_t dy = is_x.size() - dx;
    if (dx == 0 || dy == 0) throw ParseError("line 1: need at least one x and one y column");
    std::vector<double> xs, ys;
    std::size_t line_no = 1, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::size_t c = 0;
        while (std::getline(ss, field, ',')) {
            if (c == is_x.size()) throw ParseError("line " + std::to_string(line_no) + ": too many fields");
            (is_x[c++] ? xs : ys).push_back(parse_real(field, line_no));
        }
        if (c != is_x.size()) throw ParseError("line " + std::to_string(line_no) + ": too few fields");
        ++rows;
    }
    if (rows == 0) throw ValidationError("'" + path + "' has no samples");
    Samples s{Matrix(rows, dx), Matrix(rows, dy)};
    std::copy(xs.begin(), xs.end(), s.x.data().begin());
    std::copy(ys.begin(), ys.end(), s.y.data().begin());
    return s;
}

Metric metric_of(const std::string& name) { return parse_metric(name); }

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct Globals {
    std::uint64_t seed = 7;
    std::string output_dir = "out";
    std::string log_level = "info";
};

struct SelectSettings {
    InputSettings in;
    std::string strategy = "maxmin";
    std::size_t k = 0;
    std::string metric = "euclidean";
};

Outputs run_select(const SelectSettings& s, const Globals& g) {
    const EmbeddedDataset ds = load_dataset(s.in);
    const Metric metric = metric_of(s.metric);
    const Selection sel = select(parse_strategy(s.strategy), ds, s.k, g.seed, metric);
    json ids = json::array();
    for (std::size_t i : sel.indices) ids.push_back(ds.id(i));
    spdlog::info("selected {} of {} points with {}", sel.indices.size(), ds.size(), to_string(sel.strategy));
    return {{"selection.json", dump({{"strategy", to_string(sel.strategy)},
                                     {"seed", sel.seed},
                                     {"metric", to_string(sel.metric)},
                                     {"k", sel.indices.size()},
                                     {"indices", sel.indices},
                                     {"ids", ids},
                                     {"step_min_dist", sel.step_min_dist}})}};
}

struct StatsSettings {
    InputSettings in;
    std::string metric = "euclidean";
};

Outputs run_stats(const StatsSettings& s, const Globals&) {
    const EmbeddedDataset ds = load_dataset(s.in);
    const DistanceReport r = distance_report(ds, metric_of(s.metric));
    json nn = json::array();
    for (std::size_t i = 0; i < r.nn_dist.size(); ++i) nn.push_back({{"id", ds.id(i)}, {"nn_dist", r.nn_dist[i]}});
    spdlog::info("h_min = {} over {} points", r.h_min, r.n);
    return {{"distance_report.json",
             dump({{"n", r.n},
                   {"metric", to_string(r.metric)},
                   {"h_min", r.h_min},
                   {"argmin_pair", {r.argmin_pair.first, r.argmin_pair.second}},
                   {"argmin_ids", {ds.id(r.argmin_pair.first), ds.id(r.argmin_pair.second)}},
                   {"general_position", ds.dim() <= 3 ? json(general_position_check(ds)) : json(nullptr)},
                   {"nn_dist", nn}})}};
}

struct ProjectSettings {
    InputSettings in;
    std::size_t k = 2;
    bool scale = true;
};

Outputs run_project(const ProjectSettings& s, const Globals&) {
    const EmbeddedDataset ds = load_dataset(s.in);
    const PcaModel model = pca_fit(ds, s.k);
    auto pts = pca_project(model, ds);
    if (s.scale) pts = minmax_scale(std::move(pts));
    std::string csv = "id";
    const char* names[] = {"x", "y", "z"};
    for (std::size_t c = 0; c < s.k; ++c) csv += "," + (c < 3 ? std::string(names[c]) : "c" + std::to_string(c));
    csv += "\n";
    for (const auto& p : pts) {
        if (p.id.find_first_of(",\n\r") != std::string::npos)
            throw ValidationError("id '" + p.id + "' cannot be written to CSV");
        csv += p.id;
        for (double v : p.coords) csv += "," + num(v);
        csv += "\n";
    }
    std::vector<double> ratio;
    for (double v : model.explained_variance) ratio.push_back(model.total_variance > 0 ? v / model.total_variance : 0.0);
    return {{"projection.csv", csv},
            {"projection.json", dump({{"n", ds.size()},
                                      {"input_dim", ds.dim()},
                                      {"k", s.k},
                                      {"scaled", s.scale},
                                      {"explained_variance", model.explained_variance},
                                      {"explained_variance_ratio", ratio},
                                      {"total_variance", model.total_variance},
                                      {"mean", model.mean},
                                      {"components", model.components}})}};
}

struct MeshSettings {
    InputSettings in;
    bool pca = false;
};

Outputs run_mesh(const MeshSettings& s, const Globals&) {
    EmbeddedDataset ds = load_dataset(s.in);
    if (s.pca) {
        const auto pts = minmax_scale(pca_project(pca_fit(ds, 2), ds));
        EmbeddedDataset flat(2);
        for (const auto& p : pts) flat.add(p.id, p.coords);
        ds = std::move(flat);
    }
    if (ds.dim() > 2) throw ValidationError("mesh needs 1-D or 2-D points (use --pca to project)");
    const SimplexMesh mesh = delaunay(ds);
    const std::size_t k = mesh.dim + 1;
    std::string csv = "simplex";
    for (std::size_t a = 0; a < k; ++a) csv += ",v" + std::to_string(a);
    for (std::size_t a = 0; a < k; ++a) csv += ",id" + std::to_string(a);
    csv += ",diameter\n";
    for (std::size_t t = 0; t < mesh.simplex_count(); ++t) {
        const auto v = mesh.simplex(t);
        csv += std::to_string(t);
        for (std::size_t a = 0; a < k; ++a) csv += "," + std::to_string(v[a]);
        for (std::size_t a = 0; a < k; ++a) csv += "," + ds.id(v[a]);
        csv += "," + num(mesh.per_simplex_diameter[t]) + "\n";
    }
    spdlog::info("{} simplices over {} vertices", mesh.simplex_count(), mesh.vertex_count());
    json summary{{"dim", mesh.dim},
                 {"vertices", mesh.vertex_count()},
                 {"simplices", mesh.simplex_count()},
                 {"h_max", h_max_simplex(mesh)},
                 {"h_min", mesh_h_min(mesh)},
                 {"volume", mesh_volume(mesh)}};
    if (mesh.dim == 2) summary["min_circumcircle_clearance"] = min_circumcircle_clearance(mesh);
    return {{"mesh.csv", csv}, {"mesh.json", dump(summary)}};
}

struct BoundsSettings {
    std::string spec;
    std::size_t dim = 2;
    std::size_t n = 100;
    double delta = 0.1;
    std::size_t trials = 500;
    double c = 0.0;
    std::vector<std::size_t> pilot_n{100};
    std::size_t pilot_trials = 500;
};

// Density spec TOML: kind = "uniform_box" | "truncated_gaussian_mixture",
// lo/hi arrays for the box, [[components]] with weight/mean/stddev, and an
// optional pi_bar_ratio.
DensitySpec load_density(const std::string& path) {
    toml::table t;
    try {
        t = toml::parse_file(path);
    } catch (const toml::parse_error& e) {
        throw ParseError("density spec '" + path + "': " + std::string(e.description()));
    }
    const std::vector<std::string> known{"kind", "lo", "hi", "components", "pi_bar_ratio"};
    for (const auto& [k, _] : t)
        if (std::find(known.begin(), known.end(), k.str()) == known.end())
            throw ValidationError("unknown density key '" + std::string(k.str()) + "'");
    const std::string kind = t["kind"].value_or(std::string("uniform_box"));
    if (!t.contains("lo") || !t.contains("hi")) throw ValidationError("density spec needs lo and hi");
    Box box{value_from<std::vector<double>>(*t.get("lo"), "lo"), value_from<std::vector<double>>(*t.get("hi"), "hi")};
    if (box.lo.size() != box.hi.size()) throw ValidationError("density spec: lo and hi differ in length");
    if (kind == "uniform_box") {
        if (t.contains("components")) throw ValidationError("uniform_box takes no components");
        return make_uniform_box(box);
    }
    if (kind != "truncated_gaussian_mixture") throw ValidationError("unknown density kind '" + kind + "'");
    const auto* comps = t["components"].as_array();
    if (!comps) throw ValidationError("mixture needs a components array");
    std::vector<GaussianComponent> out;
    for (const auto& node : *comps) {
        const auto* c = node.as_table();
        if (!c) throw ValidationError("each component must be a table");
        for (const auto& [k, _] : *c)
            if (k.str() != "weight" && k.str() != "mean" && k.str() != "stddev")
                throw ValidationError("unknown component key '" + std::string(k.str()) + "'");
        GaussianComponent gc;
        if (auto* w = c->get("weight")) gc.weight = value_from<double>(*w, "weight");
        if (auto* m = c->get("mean")) gc.mean = value_from<std::vector<double>>(*m, "mean");
        if (auto* sd = c->get("stddev")) gc.stddev = value_from<double>(*sd, "stddev");
        out.push_back(gc);
    }
    double ratio = 0.5;
    if (auto* r = t.get("pi_bar_ratio")) ratio = value_from<double>(*r, "pi_bar_ratio");
    return make_truncated_mixture(box, out, ratio);
}

Outputs run_bounds(const BoundsSettings& s, const Globals& g) {
    const DensitySpec spec = s.spec.empty() ? make_uniform_box(Box::unit(s.dim)) : load_density(s.spec);
    validate_density(spec);
    double c = s.c;
    const bool calibrated = !(c > 0.0);
    if (calibrated) {
        c = calibrate_upper_constant(spec.dim(), s.delta, s.pilot_n, s.pilot_trials, derive_seed(g.seed, 1));
        spdlog::info("calibrated C = {}", c);
    }
    const BoundReport r = monte_carlo_hmin(spec, s.n, s.trials, s.delta, c, derive_seed(g.seed, 0));
    const auto& e = r.empirical_hmin;
    return {{"bound_report.json",
             dump({{"n", r.n},
                   {"d", r.d},
                   {"delta", r.delta},
                   {"kind", spec.kind == DensityKind::uniform_box ? "uniform_box" : "truncated_gaussian_mixture"},
                   {"pi_max", spec.pi_max},
                   {"pi_bar_max", spec.pi_bar_max},
                   {"pi_min", spec.pi_min},
                   {"lower", r.lower},
                   {"upper", r.upper},
                   {"upper_general", std::isfinite(r.upper_general) ? json(r.upper_general) : json(nullptr)},
                   {"constant_c", r.constant_c},
                   {"constant_c_calibrated", calibrated},
                   {"trials", r.trials},
                   {"coverage_lower", r.coverage_lower},
                   {"coverage_upper", r.coverage_upper},
                   {"coverage_joint", r.coverage_joint},
                   {"ball_condition", r.ball_condition ? json(*r.ball_condition) : json(nullptr)},
                   {"empirical_hmin",
                    {{"mean", e.mean}, {"stddev", e.stddev}, {"min", e.min}, {"q05", e.q05}, {"q25", e.q25},
                     {"median", e.median}, {"q75", e.q75}, {"q95", e.q95}, {"max", e.max}}},
                   {"hmin_samples", r.hmin_samples}})}};
}

struct NetSettings {
    std::size_t blocks = 2;
    std::size_t width = 32;
    double eps = 0.2;
    double eta = 1.0;
    std::size_t steps = 20000;
};

void bind_net(CLI::App* app, Section& sec, NetSettings& n) {
    add_setting(app, sec, "blocks", n.blocks, "Residual blocks L");
    add_setting(app, sec, "width", n.width, "Hidden width of every block");
    add_setting(app, sec, "eps", n.eps, "Normalization parameter epsilon");
    add_setting(app, sec, "eta", n.eta, "Gradient-descent step size");
    add_setting(app, sec, "steps", n.steps, "Maximum number of GD steps");
}

struct TrainSettings {
    NetSettings net{2, 32, 0.2, 1.0, 2000};
    std::string data = "planted";
    double pair_distance = 0.1;
    std::size_t mu_low_every = 10;
    double stop_loss = -1.0;
    std::vector<double> threshold_fractions{0.1, 0.01};
    std::size_t window = 3;
    std::vector<std::string> strategies;
    std::size_t k = 0;
    std::string metric = "euclidean";
    std::size_t dissipativity_samples = 0;
    double dissipativity_radius = 0.1;
    std::size_t stationary_steps = 20000;
    bool save_params = false;
};

std::string trace_csv(const std::string& label, const TrainTrace& t, std::string header) {
    std::string out = std::move(header);
    for (const auto& s : t.steps)
        out += label + std::to_string(s.k) + "," + num(s.loss) + "," + num(s.grad_norm) + "," + opt_num(s.mu_low) +
               "," + opt_num(s.grad_lb_residual) + "," + opt_num(s.conv_factor_residual) + "\n";
    return out;
}

Outputs run_train(const TrainSettings& s, const Globals& g, const fs::path& out_dir) {
    const Samples data = s.data == "planted" ? plant_pair(planted_pair_fixture(), s.pair_distance)
                                             : read_samples(s.data);
    const NetConfig cfg = NetConfig::uniform(data.x.cols(), s.net.blocks, s.net.width, s.net.eps, data.y.cols());
    cfg.validate();
    GdConfig gd;
    gd.eta = s.net.eta;
    gd.max_steps = s.net.steps;
    gd.mu_low_every = s.mu_low_every;
    gd.seed = g.seed;
    if (s.stop_loss >= 0.0) gd.stop_loss = s.stop_loss;
    if (!frame_bound_can_be_positive(cfg, data.size()))
        spdlog::warn("dim(theta) = {} < N * out_dim = {}: mu_low is 0", cfg.parameter_count(),
                     data.size() * cfg.out_dim);

    const ResidualNetParams theta0 = init_params(cfg, g.seed);
    const TrainTrace trace = gd_run(theta0, cfg, data, gd);
    if (trace.steps.empty()) throw NumericalError("training produced no steps: " + trace.abort_reason);
    spdlog::info("{} steps, loss {} -> {}", trace.steps.size() - 1, trace.steps.front().loss, trace.steps.back().loss);

    Outputs out;
    out["trace.csv"] = trace_csv("", trace, "k,loss,grad_norm,mu_low,grad_lb_residual,conv_factor_residual\n");

    std::size_t lb_checked = 0, lb_failed = 0, cf_checked = 0, cf_passed = 0;
    for (const auto& st : trace.steps) {
        if (st.grad_lb_residual) {
            ++lb_checked;
            lb_failed += *st.grad_lb_residual < -grad_lower_bound_tolerance(st.grad_norm);
        }
        if (st.conv_factor_residual) {
            ++cf_checked;
            cf_passed += *st.conv_factor_residual >= 0.0;
        }
    }

    const double loss0 = trace.steps.front().loss;
    std::vector<double> thresholds;
    for (double f : s.threshold_fractions) thresholds.push_back(f * loss0);

    std::string thr_csv = "strategy,threshold,steps\n";
    json runs = json::array();
    for (double t : thresholds) thr_csv += "all," + num(t) + "," + opt_count(steps_to_threshold(trace, t, s.window)) + "\n";
    if (!s.strategies.empty()) {
        std::vector<Strategy> strategies;
        for (const auto& name : s.strategies) strategies.push_back(parse_strategy(name));
        const EmbeddedDataset pool = to_dataset(data.x);
        const auto study = threshold_study(pool, data.y, strategies, s.k, g.seed, metric_of(s.metric), cfg, gd, g.seed);
        for (const auto& cell : threshold_table(study, thresholds, s.window))
            thr_csv += std::string(to_string(cell.strategy)) + "," + num(cell.threshold) + "," + opt_count(cell.steps) +
                       "\n";
        std::string study_csv = "strategy,k,loss,grad_norm,mu_low,grad_lb_residual,conv_factor_residual\n";
        for (const auto& r : study) {
            study_csv = trace_csv(std::string(to_string(r.strategy)) + ",", r.trace, study_csv);
            runs.push_back({{"strategy", to_string(r.strategy)},
                            {"indices", r.selection.indices},
                            {"h_min", r.h_min},
                            {"mu_low0", r.mu_low0},
                            {"final_loss", r.trace.steps.empty() ? json(nullptr) : json(r.trace.steps.back().loss)}});
        }
        out["study_trace.csv"] = study_csv;
    }
    out["thresholds.csv"] = thr_csv;

    json summary{{"n_points", data.size()},
                 {"input_dim", cfg.d},
                 {"out_dim", cfg.out_dim},
                 {"parameter_count", cfg.parameter_count()},
                 {"h_min", h_min(to_dataset(data.x))},
                 {"block_scale", trace.block_scale},
                 {"steps_run", trace.steps.size() - 1},
                 {"loss0", loss0},
                 {"final_loss", trace.steps.back().loss},
                 {"mu_low0", opt_json(trace.steps.front().mu_low)},
                 {"l_hat", opt_json(trace.l_hat)},
                 {"stable_step_bound", opt_json(stable_step_bound(trace))},
                 {"aborted", trace.aborted},
                 {"abort_reason", trace.abort_reason},
                 {"grad_lower_bound", {{"checked", lb_checked}, {"violations", lb_failed}}},
                 {"convergence_factor", {{"checked", cf_checked}, {"passed", cf_passed}}},
                 {"strategy_runs", runs}};

    ResidualNetParams final_params{trace.final_theta};
    if (s.dissipativity_samples > 0) {
        const StationaryPoint sp = find_stationary_point(final_params, cfg, data, s.net.eta, s.stationary_steps);
        summary["dissipativity"] = {
            {"stationary_converged", sp.converged},
            {"stationary_grad_norm", sp.grad_norm},
            {"radius", s.dissipativity_radius},
            {"rho_hat", dissipativity_rho(cfg, data, sp.params, s.dissipativity_radius, s.dissipativity_samples,
                                          derive_seed(g.seed, 2))}};
    }
    out["summary.json"] = dump(summary);
    if (s.save_params) {
        // The bundle is a directory; stage it next to the reports.
        const fs::path staging = out_dir / "params.tmp";
        fs::remove_all(staging);
        write_params(staging, final_params, cfg);
        for (const auto& e : fs::directory_iterator(staging)) {
            std::ifstream in(e.path(), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            out["params/" + e.path().filename().string()] = ss.str();
        }
        fs::remove_all(staging);
    }
    return out;
}

struct ApproxSettings {
    std::string g = "sin";
    std::size_t dim = 1;
    std::vector<std::size_t> sizes{8, 16, 32};
    double p = 2.0;
    int m = 2;
    int r = 0;
    std::size_t subdivisions = 1;
};

Outputs run_approx(const ApproxSettings& s, const Globals&) {
    const NamedField field = named_field(s.g, s.dim);
    SweepSettings settings;
    settings.p = s.p;
    settings.m = s.m;
    settings.r = s.r;
    settings.quadrature.subdivisions = s.subdivisions;
    const OrderSweepResult res = order_sweep(field.g, field.domain, s.sizes, settings);
    std::string csv = "cells,h_max,h_min,p,lp_error,bound_value,order_estimate\n";
    for (const auto& r : res.reports)
        csv += std::to_string(r.cells) + "," + num(r.h_max) + "," + num(r.h_min) + "," + num(r.p) + "," +
               num(r.lp_error) + "," + num(r.bound_value) + "," +
               (std::isnan(r.order_estimate) ? std::string() : num(r.order_estimate)) + "\n";
    bool dominated = true;
    for (const auto& r : res.reports) dominated = dominated && r.lp_error <= r.bound_value * (1.0 + 1e-12);
    if (res.fitted_order) spdlog::info("fitted order {}", *res.fitted_order);
    return {{"approx_report.csv", csv},
            {"approx_summary.json", dump({{"g", s.g},
                                          {"dim", s.dim},
                                          {"m", res.m},
                                          {"r", res.r},
                                          {"c1", res.c1},
                                          {"exact", res.exact},
                                          {"fitted_order", opt_json(res.fitted_order)},
                                          {"bound_dominates", dominated}})}};
}

struct SweepSettingsCli {
    NetSettings net;
    std::vector<double> grid{0.5, 0.1, 0.02, 0.0};
    double tau_fraction = 0.01;
    std::size_t window = 3;
};

Outputs run_sweep(const SweepSettingsCli& s, const Globals& g) {
    SweepConfig cfg;
    cfg.grid = s.grid;
    cfg.net = NetConfig::uniform(2, s.net.blocks, s.net.width, s.net.eps, 1);
    cfg.gd.eta = s.net.eta;
    cfg.gd.max_steps = s.net.steps;
    cfg.init_seed = g.seed;
    cfg.tau_fraction = s.tau_fraction;
    cfg.window = s.window;
    const auto rows = sweep_hmin(cfg);
    std::string csv = "pair_distance,h_min,mu_low0,loss0,final_loss,threshold,steps_to_threshold\n";
    for (const auto& r : rows) {
        csv += num(r.pair_distance) + "," + num(r.h_min) + "," + num(r.mu_low0) + "," + num(r.loss0) + "," +
               num(r.final_loss) + "," + num(r.threshold) + "," + opt_count(r.steps_to_threshold) + "\n";
        spdlog::info("distance {}: mu_low0 {} steps {}", r.pair_distance, r.mu_low0, opt_count(r.steps_to_threshold));
    }
    return {{"sweep.csv", csv}};
}

void configure_logging(const std::string& level) {
    auto logger = spdlog::stderr_logger_st("uniformity_lab");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off")
        throw ValidationError("unknown log level '" + level + "' (trace, debug, info, warn, error, off)");
    spdlog::set_level(lvl);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uniformity_lab: uniformity-driven data selection and numerical checks"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::string config_path;
    Section globals{"", {}};
    app.add_option("--config", config_path, "TOML config; one table per subcommand, flags override file values");
    add_setting(&app, globals, "seed", g.seed, "Seed for every random choice");
    add_setting(&app, globals, "output_dir", g.output_dir, "Directory for reports and manifest.json");
    add_setting(&app, globals, "log_level", g.log_level, "trace, debug, info, warn, error or off");

    std::map<std::string, Section> sections;
    auto sub = [&](const std::string& name, const std::string& help) {
        sections[name].name = name;
        return std::pair{app.add_subcommand(name, help), &sections[name]};
    };

    SelectSettings sel;
    {
        auto [c, sec] = sub("select", "Choose a subset of k points");
        bind_input(c, *sec, sel.in);
        add_setting(c, *sec, "strategy", sel.strategy, "maxmin, random, mindist, mixed or head");
        add_setting(c, *sec, "k", sel.k, "Subset size");
        add_setting(c, *sec, "metric", sel.metric, "euclidean or cosine");
    }
    StatsSettings stats;
    {
        auto [c, sec] = sub("stats", "Pairwise distance statistics and h_min");
        bind_input(c, *sec, stats.in);
        add_setting(c, *sec, "metric", stats.metric, "euclidean or cosine");
    }
    ProjectSettings proj;
    {
        auto [c, sec] = sub("project", "PCA projection (min-max scaled to [0,1])");
        bind_input(c, *sec, proj.in);
        add_setting(c, *sec, "k", proj.k, "Number of principal components");
        add_setting(c, *sec, "scale", proj.scale, "Min-max scale the projected coordinates");
    }
    MeshSettings mesh;
    {
        auto [c, sec] = sub("mesh", "Delaunay mesh of 1-D or 2-D points");
        bind_input(c, *sec, mesh.in);
        add_setting(c, *sec, "pca", mesh.pca, "Project to 2-D with PCA and min-max scaling first");
    }
    BoundsSettings bounds;
    {
        auto [c, sec] = sub("bounds", "Monte Carlo check of the h_min bounds");
        add_setting(c, *sec, "spec", bounds.spec, "Density spec TOML (default: uniform unit box of --dim)");
        add_setting(c, *sec, "dim", bounds.dim, "Dimension of the default uniform box");
        add_setting(c, *sec, "n", bounds.n, "Points per trial");
        add_setting(c, *sec, "delta", bounds.delta, "Failure probability delta");
        add_setting(c, *sec, "trials", bounds.trials, "Monte Carlo trials");
        add_setting(c, *sec, "c", bounds.c, "Upper-bound constant C (0 = calibrate on uniform pilots)");
        add_setting(c, *sec, "pilot_n", bounds.pilot_n, "Pilot sizes N for calibrating C");
        add_setting(c, *sec, "pilot_trials", bounds.pilot_trials, "Trials per pilot size");
    }
    TrainSettings train;
    {
        auto [c, sec] = sub("train", "Full-batch GD on the residual network with frame-bound tracking");
        add_setting(c, *sec, "data", train.data, "'planted' or a sample CSV with x<i>/y<i> columns");
        add_setting(c, *sec, "pair_distance", train.pair_distance, "Planted pair distance for the built-in data");
        bind_net(c, *sec, train.net);
        add_setting(c, *sec, "mu_low_every", train.mu_low_every, "Steps between mu_low evaluations (0 = never)");
        add_setting(c, *sec, "stop_loss", train.stop_loss, "Stop once the loss reaches this value (< 0 = off)");
        add_setting(c, *sec, "threshold_fractions", train.threshold_fractions, "Loss thresholds as fractions of L0");
        add_setting(c, *sec, "window", train.window, "Moving-average window for steps to threshold");
        add_setting(c, *sec, "strategies", train.strategies, "Selection strategies to compare on k-point subsets");
        add_setting(c, *sec, "k", train.k, "Subset size for the strategy comparison");
        add_setting(c, *sec, "metric", train.metric, "Metric used by the selection strategies");
        add_setting(c, *sec, "dissipativity_samples", train.dissipativity_samples,
             "Samples for the dissipativity estimate (0 = skip)");
        add_setting(c, *sec, "dissipativity_radius", train.dissipativity_radius, "Ball radius for the dissipativity estimate");
        add_setting(c, *sec, "stationary_steps", train.stationary_steps, "GD budget for locating a stationary point");
        add_setting(c, *sec, "save_params", train.save_params, "Write the trained weights under params/");
    }
    ApproxSettings approx;
    {
        auto [c, sec] = sub("approx", "Piecewise-linear interpolation error sweep");
        add_setting(c, *sec, "g", approx.g, "Ground truth: sin, quad or gauss");
        add_setting(c, *sec, "dim", approx.dim, "1 or 2");
        add_setting(c, *sec, "sizes", approx.sizes, "Cells per axis of each mesh");
        add_setting(c, *sec, "p", approx.p, "Error norm exponent (inf for the sup norm)");
        add_setting(c, *sec, "m", approx.m, "Smoothness order m of the bound");
        add_setting(c, *sec, "r", approx.r, "Derivative order r of the bound");
        add_setting(c, *sec, "subdivisions", approx.subdivisions, "Quadrature subdivisions per simplex");
    }
    SweepSettingsCli sweep;
    {
        auto [c, sec] = sub("sweep", "Planted-pair h_min sweep: mu_low and steps to threshold");
        add_setting(c, *sec, "grid", sweep.grid, "Planted pair distances");
        bind_net(c, *sec, sweep.net);
        add_setting(c, *sec, "tau_fraction", sweep.tau_fraction, "Threshold as a fraction of L0");
        add_setting(c, *sec, "window", sweep.window, "Moving-average window");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << error_line("usage", e.what()) << std::endl;
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    Section& section = sections.at(name);
    fs::path out_dir;
    try {
        if (!config_path.empty()) {
            toml::table table;
            try {
                table = toml::parse_file(config_path);
            } catch (const toml::parse_error& e) {
                throw ParseError("config '" + config_path + "': " + std::string(e.description()));
            } catch (const std::exception& e) {
                throw IoError("config '" + config_path + "': " + e.what());
            }
            apply_table(table, globals);
            for (const auto& [k, node] : table) {
                if (!node.is_table()) continue;
                auto it = sections.find(std::string(k.str()));
                if (it == sections.end()) throw ValidationError("unknown config table '" + std::string(k.str()) + "'");
                apply_table(*node.as_table(), it->second);
            }
        }
        configure_logging(g.log_level);
        out_dir = g.output_dir;
    } catch (const std::exception& e) {
        std::cerr << error_line(error_kind(e), e.what()) << std::endl;
        return 1;
    }

    try {
        Outputs outputs;
        if (name == "select") outputs = run_select(sel, g);
        else if (name == "stats") outputs = run_stats(stats, g);
        else if (name == "project") outputs = run_project(proj, g);
        else if (name == "mesh") outputs = run_mesh(mesh, g);
        else if (name == "bounds") outputs = run_bounds(bounds, g);
        else if (name == "train") outputs = run_train(train, g, out_dir);
        else if (name == "approx") outputs = run_approx(approx, g);
        else outputs = run_sweep(sweep, g);

        std::error_code ec;
        fs::remove(out_dir / (name + ".failed"), ec);
        json files = json::array();
        for (const auto& [file, content] : outputs) {
            write_atomic(out_dir / file, content);
            files.push_back(file);
        }
        json manifest{{"version", kVersion},
                      {"subcommand", name},
                      {"config", {{"global", resolved(globals)}, {name, resolved(section)}}},
                      {"config_file", config_path.empty() ? json(nullptr) : json(config_path)},
                      {"timestamp", utc_timestamp()},
                      {"outputs", files}};
        write_atomic(out_dir / "manifest.json", dump(manifest));
        spdlog::info("wrote {} report file(s) to {}", outputs.size(), out_dir.string());
        return 0;
    } catch (const std::exception& e) {
        const std::string line = error_line(error_kind(e), e.what());
        try {
            write_atomic(out_dir / (name + ".failed"), line + "\n");
        } catch (const std::exception&) {
        }
        std::cerr << line << std::endl;
        return 1;
    }
}
