#include "cml/json_io.hpp"

#include <map>

#include "cml/format.hpp"

namespace cml {

using nlohmann::json;

local_map map_from_json(const json& spec) {
    if (!spec.is_object() || !spec.contains("kind"))
        throw parameter_violation("map spec needs a \"kind\" field");
    std::string kind = spec.at("kind").get<std::string>();
    double a = spec.value("a", 3.0);
    double eta = spec.value("eta", 0.0);
    bool has_interval = spec.contains("x_lo") || spec.contains("x_hi");
    if (has_interval && !(spec.contains("x_lo") && spec.contains("x_hi")))
        throw parameter_violation("map spec needs both x_lo and x_hi or neither");

    if (kind == "lorenz") {
        if (eta != 0.0)
            throw parameter_violation("lorenz spec cannot carry a perturbation");
        if (has_interval)
            return make_lorenz(a, spec.at("x_lo").get<double>(),
                               spec.at("x_hi").get<double>());
        return make_lorenz(a);
    }
    if (kind == "perturbed") {
        if (has_interval)
            return make_perturbed_lorenz(a, eta, spec.at("x_lo").get<double>(),
                                         spec.at("x_hi").get<double>());
        return make_perturbed_lorenz(a, eta);
    }
    throw parameter_violation("unknown map kind: " + kind);
}

json map_to_json(const local_map& map) {
    return json{{"kind", map.kind()},
                {"a", map.a()},
                {"eta", map.eta()},
                {"x_lo", map.x_lo()},
                {"x_hi", map.x_hi()}};
}

kernel kernel_from_json(const json& spec) {
    if (!spec.is_object() || !spec.contains("kind"))
        throw parameter_violation("kernel spec needs a \"kind\" field");
    std::string kind = spec.at("kind").get<std::string>();
    if (kind == "laplacian") return laplacian(spec.value("eps", 0.0));
    if (kind == "table") {
        if (!spec.contains("coeffs") || !spec.at("coeffs").is_object())
            throw parameter_violation("table kernel needs a \"coeffs\" object");
        std::map<int, double> coeffs;
        for (const auto& [key, value] : spec.at("coeffs").items())
            coeffs[std::stoi(key)] = value.get<double>();
        return kernel(coeffs);
    }
    throw parameter_violation("unknown kernel kind: " + kind);
}

json kernel_to_json(const kernel& k) {
    json coeffs = json::object();
    for (std::size_t m = 0; m < k.support_size(); ++m)
        coeffs[std::to_string(k.offsets()[m])] = k.weights()[m];
    return json{{"kind", "table"}, {"coeffs", coeffs}};
}

json to_json(const rate_estimate& est) {
    return json{{"gamma", est.gamma},
                {"std_err", est.std_err},
                {"T_used", est.T_used},
                {"burn_in", est.burn_in},
                {"seed", est.seed}};
}

json to_json(const partition_value& z) {
    return json{{"L", z.L},
                {"T", z.T},
                {"log_z_point", z.log_z_point},
                {"log_z_upper", z.log_z_upper},
                {"word_count_log", z.word_count_log}};
}

experiment_config default_config() {
    experiment_config cfg;
    cfg.map_spec = json{{"kind", "lorenz"}, {"a", 3.0}};
    cfg.kernel_spec = json{{"kind", "laplacian"}, {"eps", 0.1}};
    cfg.L_values = {1, 2, 3};
    return cfg;
}

// Grid keys accept a bare scalar as a one-element list, so command line
// overrides like L_values=4 need no bracket quoting.
static json as_list(const json& v) {
    return v.is_array() ? v : json::array({v});
}

experiment_config config_from_json(const json& doc) {
    experiment_config cfg = default_config();
    if (!doc.is_object()) throw parameter_violation("config must be a JSON object");
    if (doc.contains("experiment")) cfg.kind = doc.at("experiment").get<std::string>();
    if (doc.contains("map")) cfg.map_spec = doc.at("map");
    if (doc.contains("kernel")) cfg.kernel_spec = doc.at("kernel");
    if (doc.contains("L_values"))
        cfg.L_values = as_list(doc.at("L_values")).get<std::vector<std::size_t>>();
    if (doc.contains("eps_values"))
        cfg.eps_values = as_list(doc.at("eps_values")).get<std::vector<double>>();
    if (doc.contains("T")) cfg.T = doc.at("T").get<std::size_t>();
    if (doc.contains("n")) cfg.n = doc.at("n").get<std::size_t>();
    if (doc.contains("burn_in")) cfg.burn_in = doc.at("burn_in").get<std::size_t>();
    if (doc.contains("replicates")) cfg.replicates = doc.at("replicates").get<std::size_t>();
    if (doc.contains("T_max")) cfg.T_max = doc.at("T_max").get<std::size_t>();
    if (doc.contains("panels")) cfg.panels = doc.at("panels").get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("budget")) cfg.budget = doc.at("budget").get<std::uint64_t>();
    if (doc.contains("jitter")) cfg.jitter = doc.at("jitter").get<double>();
    if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();

    if (cfg.L_values.empty())
        throw parameter_violation("config needs a non-empty L_values grid");
    static const char* kinds[] = {"exact", "mc", "partition", "scan", "check"};
    bool known = false;
    for (const char* k : kinds) known = known || cfg.kind == k;
    if (!known) throw parameter_violation("unknown experiment kind: " + cfg.kind);
    return cfg;
}

json config_to_json(const experiment_config& cfg) {
    json doc{{"experiment", cfg.kind},
             {"map", cfg.map_spec},
             {"kernel", cfg.kernel_spec},
             {"L_values", cfg.L_values},
             {"T", cfg.T},
             {"n", cfg.n},
             {"burn_in", cfg.burn_in},
             {"replicates", cfg.replicates},
             {"T_max", cfg.T_max},
             {"panels", cfg.panels},
             {"seed", cfg.seed},
             {"budget", cfg.budget},
             {"jitter", cfg.jitter}};
    if (!cfg.eps_values.empty()) doc["eps_values"] = cfg.eps_values;
    if (!cfg.out.empty()) doc["out"] = cfg.out;
    return doc;
}

std::string config_hash_hex(const experiment_config& cfg) {
    json doc = config_to_json(cfg);
    doc.erase("out"); // the destination is not part of the experiment identity
    std::string canon = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace cml
