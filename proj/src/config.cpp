#include "isar/errors.hpp"
#include "isar/io.hpp"

#include <json.hpp>

#include <set>

namespace isar::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Typed access to one JSON object that remembers its path for error
// messages and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key)
    {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    template <class T>
    void read(const std::string& key, T& out)
    {
        if (const json* v = get(key)) {
            out = convert<T>(*v, field(key));
        }
    }

    template <class T>
    void read(const std::string& key, std::optional<T>& out)
    {
        if (const json* v = get(key)) {
            out = v->is_null() ? std::nullopt : std::optional<T>(convert<T>(*v, field(key)));
        }
    }

    void finish() const
    {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError(field(key), "unknown key");
            }
        }
    }

    template <class T>
    static T convert(const json& v, const std::string& where)
    {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                throw ConfigError(where, "expected a boolean");
            }
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                throw ConfigError(where, "expected an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) {
                    return v.get<T>();
                }
                if (v.get<long long>() < 0) {
                    throw ConfigError(where, "expected a nonnegative integer");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                throw ConfigError(where, "expected a number");
            }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                throw ConfigError(where, "expected a string");
            }
        }
        return v.get<T>();
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn>
auto with_field(const std::string& where, Fn&& fn)
{
    try {
        return fn();
    } catch (const ArgumentError& e) {
        throw ConfigError(where, e.what());
    }
}

SolverConfig read_solver_config(const json& obj, const std::string& path, SolverMode mode)
{
    SolverConfig c = SolverConfig::defaults_for(mode);
    ObjectReader r(obj, path);
    r.read("epsilon", c.epsilon);
    r.read("mu_final", c.mu_final);
    r.read("continuation_stages", c.continuation_stages);
    r.read("max_iters_per_stage", c.max_iters_per_stage);
    r.read("convergence_tol", c.convergence_tol);
    r.read("sl0_sigma_decrease", c.sl0_sigma_decrease);
    r.read("sl0_inner_iters", c.sl0_inner_iters);
    r.read("sl0_step", c.sl0_step);
    r.read("sl0_sigma_min", c.sl0_sigma_min);
    r.read("sbl_prune_threshold", c.sbl_prune_threshold);
    r.read("sbl_max_iters", c.sbl_max_iters);
    r.read("sbl_tol", c.sbl_tol);
    r.read("noise_variance", c.noise_variance);
    r.read("sbl_estimate_noise", c.sbl_estimate_noise);
    r.read("seed", c.seed);
    r.finish();
    with_field(path, [&] {
        c.validate();
        return 0;
    });
    return c;
}

ordered_json solver_config_json(const SolverConfig& c)
{
    ordered_json j;
    j["epsilon"] = c.epsilon ? ordered_json(*c.epsilon) : ordered_json(nullptr);
    j["mu_final"] = c.mu_final;
    j["continuation_stages"] = c.continuation_stages;
    j["max_iters_per_stage"] = c.max_iters_per_stage;
    j["convergence_tol"] = c.convergence_tol;
    j["sl0_sigma_decrease"] = c.sl0_sigma_decrease;
    j["sl0_inner_iters"] = c.sl0_inner_iters;
    j["sl0_step"] = c.sl0_step;
    j["sl0_sigma_min"] = c.sl0_sigma_min;
    j["sbl_prune_threshold"] = c.sbl_prune_threshold;
    j["sbl_max_iters"] = c.sbl_max_iters;
    j["sbl_tol"] = c.sbl_tol;
    j["noise_variance"] = c.noise_variance ? ordered_json(*c.noise_variance) : ordered_json(nullptr);
    j["sbl_estimate_noise"] = c.sbl_estimate_noise;
    j["seed"] = c.seed;
    return j;
}

std::string_view to_string(QualityMode m)
{
    return m == QualityMode::Simulation ? "simulation" : "deployment";
}

} // namespace

ExperimentConfig parse_config(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    ObjectReader r(root, "");

    const json* scenario = r.get("scenario");
    if (!scenario) {
        throw ConfigError("scenario", "required key missing");
    }
    cfg.scenario = with_field("scenario", [&] {
        return parse_scenario(ObjectReader::convert<std::string>(*scenario, "scenario"));
    });
    const json* n = r.get("n");
    if (!n) {
        throw ConfigError("n", "required key missing");
    }
    cfg.n = ObjectReader::convert<int>(*n, "n");

    r.read("snapshot_counts", cfg.snapshot_counts);
    if (const json* v = r.get("snr_db_list")) {
        if (!v->is_array()) {
            throw ConfigError("snr_db_list", "expected an array");
        }
        cfg.snr_db_list.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const auto& e = (*v)[i];
            const std::string where = "snr_db_list[" + std::to_string(i) + "]";
            if (e.is_string() && e.get<std::string>() == "noiseless") {
                cfg.snr_db_list.emplace_back(std::nullopt);
            } else {
                cfg.snr_db_list.emplace_back(ObjectReader::convert<double>(e, where));
            }
        }
    }
    r.read("trials", cfg.trials);
    if (const json* v = r.get("solvers")) {
        if (!v->is_array()) {
            throw ConfigError("solvers", "expected an array");
        }
        cfg.solvers.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string where = "solvers[" + std::to_string(i) + "]";
            cfg.solvers.push_back(with_field(where, [&] {
                return parse_solver_mode(ObjectReader::convert<std::string>((*v)[i], where));
            }));
        }
    }
    r.read("bernoulli_p", cfg.bernoulli_p);
    r.read("master_seed", cfg.master_seed);
    r.read("output_dir", cfg.output_dir);
    r.read("threads", cfg.threads);
    r.read("write_images", cfg.write_images);

    if (const json* v = r.get("phantom")) {
        ObjectReader p(*v, "phantom");
        p.read("debris_count", cfg.phantom.debris_count);
        p.read("amplitude_low", cfg.phantom.amplitudes.low);
        p.read("amplitude_high", cfg.phantom.amplitudes.high);
        if (const json* sat = p.get("satellite")) {
            if (!sat->is_array()) {
                throw ConfigError("phantom.satellite", "expected an array of rectangles");
            }
            SatelliteSpec spec;
            for (std::size_t i = 0; i < sat->size(); ++i) {
                ObjectReader rr((*sat)[i], "phantom.satellite[" + std::to_string(i) + "]");
                Rect rect;
                rr.read("row", rect.row);
                rr.read("col", rect.col);
                rr.read("height", rect.height);
                rr.read("width", rect.width);
                rr.read("amplitude", rect.amplitude);
                rr.finish();
                spec.rects.push_back(rect);
            }
            cfg.phantom.satellite = spec;
        }
        p.finish();
    }

    if (const json* v = r.get("budget")) {
        ObjectReader b(*v, "budget");
        b.read("snapshot_time_s", cfg.budget.snapshot_time_s);
        b.read("total_observation_s", cfg.budget.total_observation_s);
        b.finish();
    }

    if (const json* v = r.get("procedure")) {
        ObjectReader p(*v, "procedure");
        p.read("initial_m", cfg.procedure.initial_m);
        p.read("m_step", cfg.procedure.m_step);
        p.read("quality_threshold", cfg.procedure.quality_threshold);
        p.read("detection_threshold", cfg.procedure.detection_threshold);
        if (const json* mode = p.get("mode")) {
            const auto s = ObjectReader::convert<std::string>(*mode, "procedure.mode");
            if (s == "simulation") {
                cfg.procedure.mode = QualityMode::Simulation;
            } else if (s == "deployment") {
                cfg.procedure.mode = QualityMode::Deployment;
            } else {
                throw ConfigError("procedure.mode", "expected \"simulation\" or \"deployment\"");
            }
        }
        if (const json* s = p.get("solver")) {
            cfg.procedure.solver = with_field("procedure.solver", [&] {
                return parse_solver_mode(ObjectReader::convert<std::string>(*s, "procedure.solver"));
            });
        }
        p.finish();
    }

    if (const json* v = r.get("solver_configs")) {
        if (!v->is_object()) {
            throw ConfigError("solver_configs", "expected an object");
        }
        for (const auto& [name, body] : v->items()) {
            const std::string where = "solver_configs." + name;
            const SolverMode mode = with_field(where, [&] { return parse_solver_mode(name); });
            cfg.solver_configs[mode] = read_solver_config(body, where, mode);
        }
    }
    r.finish();

    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw ConfigError("", "config file not found: " + path.string());
    }
    return parse_config(read_text(path));
}

std::string dump_config(const ExperimentConfig& cfg)
{
    ordered_json j;
    j["scenario"] = std::string(to_string(cfg.scenario));
    j["n"] = cfg.n;
    j["snapshot_counts"] = cfg.snapshot_counts;
    ordered_json snrs = ordered_json::array();
    for (const auto& s : cfg.snr_db_list) {
        snrs.push_back(s ? ordered_json(*s) : ordered_json("noiseless"));
    }
    j["snr_db_list"] = snrs;
    j["trials"] = cfg.trials;
    ordered_json solvers = ordered_json::array();
    for (auto m : cfg.solvers) {
        solvers.push_back(std::string(to_string(m)));
    }
    j["solvers"] = solvers;
    j["bernoulli_p"] = cfg.bernoulli_p;
    j["master_seed"] = cfg.master_seed;
    j["output_dir"] = cfg.output_dir;
    j["threads"] = cfg.threads;
    j["write_images"] = cfg.write_images;

    ordered_json ph;
    ph["debris_count"] = cfg.phantom.debris_count;
    ph["amplitude_low"] = cfg.phantom.amplitudes.low;
    ph["amplitude_high"] = cfg.phantom.amplitudes.high;
    ordered_json rects = ordered_json::array();
    for (const auto& r : cfg.satellite_spec().rects) {
        rects.push_back({{"row", r.row}, {"col", r.col}, {"height", r.height}, {"width", r.width},
                         {"amplitude", r.amplitude}});
    }
    ph["satellite"] = rects;
    j["phantom"] = ph;

    j["budget"] = {{"snapshot_time_s", cfg.budget.snapshot_time_s},
                   {"total_observation_s", cfg.budget.total_observation_s}};
    j["procedure"] = {{"initial_m", cfg.procedure.initial_m},
                      {"m_step", cfg.procedure.m_step},
                      {"quality_threshold", cfg.procedure.quality_threshold},
                      {"mode", std::string(to_string(cfg.procedure.mode))},
                      {"detection_threshold", cfg.procedure.detection_threshold},
                      {"solver", std::string(to_string(cfg.procedure.solver))}};
    ordered_json sc;
    for (auto m : kAllSolvers) {
        sc[std::string(to_string(m))] = solver_config_json(cfg.solver_config(m));
    }
    j["solver_configs"] = sc;
    return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const fs::path& path)
{
    write_text_atomic(path, dump_config(cfg));
}

} // namespace isar::io
