#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "entangle/dataset.hpp"
#include "entangle/ssl.hpp"

namespace entangle::experiment {

enum class Method { sl, slk, ssl };
std::string method_name(Method m);
Method method_from_name(const std::string& name);

// A fully materialized experiment: family, data sizes, training
// hyperparameters and the seed list. One seed = one independent run
// (fresh datasets, fresh training).
struct ExperimentConfig {
    std::string preset = "custom";
    std::string family = "2q";  // 2q | rho-s | ghz3 | ghzN | bound
    FeatureScheme scheme = FeatureScheme::F;
    int n = 2;
    int k = 2;             // ghzN: k-separability task
    double fuzzy_a = 0.875;  // bound: fuzzy interval parameter
    int l = 30;
    int u = 60;
    int test_size = 2000;
    ssl::TrainConfig train;  // train.seed is replaced per run
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double sweep_h = 0.0005;
    std::string out_dir = "out";

    void validate() const;
    std::filesystem::path preset_dir() const {
        return std::filesystem::path(out_dir) / preset;
    }
};

std::vector<std::string> preset_names();
ExperimentConfig resolve_preset(const std::string& name);

// JSON round trip. config_from_json starts from a preset when the document
// carries a "preset" key (or `base_preset` is non-empty), then applies the
// remaining keys as overrides.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text, const std::string& base_preset = "");

// FNV-1a 64 over the semantic config (out_dir excluded), 16 hex chars.
std::string config_digest(const ExperimentConfig& cfg);
std::string fnv1a_hex(std::string_view bytes);

struct SeedData {
    Dataset labeled, unlabeled, validation, test;
    std::optional<Dataset> test_class;  // ghz3 only: conjugated GHZ-class states
};
SeedData datasets_for_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// Command drivers behind the CLI; they throw Config/Data/NumericError and the
// CLI maps those to exit codes 1/2/3.
void cmd_generate(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg, Method method, int jobs, bool force = false);
void cmd_eval(const ExperimentConfig& cfg, Method method, bool force = false);
void cmd_sweep_bound(const ExperimentConfig& cfg, int jobs, bool force = false);

}  // namespace entangle::experiment
