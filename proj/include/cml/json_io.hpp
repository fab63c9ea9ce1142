#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cml/coupling.hpp"
#include "cml/local_map.hpp"
#include "cml/partition.hpp"
#include "cml/rates_volume.hpp"

namespace cml {

// Map specs: {"kind": "lorenz"|"perturbed", "a": .., "eta": .., "x_lo": .., "x_hi": ..}
// with the interval endpoints optional (family defaults apply).
local_map map_from_json(const nlohmann::json& spec);
nlohmann::json map_to_json(const local_map& map);

// Kernel specs: {"kind": "laplacian", "eps": ..} or
// {"kind": "table", "coeffs": {"-1": .., "0": ..}}.
kernel kernel_from_json(const nlohmann::json& spec);
nlohmann::json kernel_to_json(const kernel& k);

nlohmann::json to_json(const rate_estimate& est);
nlohmann::json to_json(const partition_value& z);

// Experiment configuration; map and kernel stay as raw specs so overrides
// can be applied before construction.
struct experiment_config {
    std::string kind = "exact";  // exact | mc | partition | scan | check
    nlohmann::json map_spec;
    nlohmann::json kernel_spec;
    std::vector<std::size_t> L_values;
    std::vector<double> eps_values;  // empty: use the kernel spec as given
    std::size_t T = 60;
    std::size_t n = 200000;
    std::size_t burn_in = 10;
    std::size_t replicates = 1;
    std::size_t T_max = 6;
    std::size_t panels = 1024;
    std::uint64_t seed = 1;
    std::uint64_t budget = 10'000'000;
    double jitter = 1e-3;
    std::string out;
};

experiment_config config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const experiment_config& cfg);
experiment_config default_config();

// FNV-1a over the canonical (sorted-key) serialization; stamped into every
// emitted file so results are reproducible from the file alone.
std::string config_hash_hex(const experiment_config& cfg);

} // namespace cml
