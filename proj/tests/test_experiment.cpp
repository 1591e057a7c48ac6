#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "entangle/errors.hpp"
#include "entangle/experiment.hpp"

using namespace entangle;
using namespace entangle::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Desk-scale-in-miniature ghzN config for pipeline tests.
ExperimentConfig tiny_ghzn(const fs::path& out) {
    ExperimentConfig cfg = resolve_preset("ghzN-k2-4-30");
    cfg.l = 6;
    cfg.u = 8;
    cfg.test_size = 10;
    cfg.train.T = 2;
    cfg.train.epochs_warm = 2;
    cfg.train.epochs_update = 2;
    cfg.train.validation_size = 6;
    cfg.seeds = {1, 2};
    cfg.out_dir = out.string();
    return cfg;
}

ExperimentConfig tiny_bound(const fs::path& out) {
    ExperimentConfig cfg = resolve_preset("bound-n4-a78");
    cfg.l = 10;
    cfg.u = 12;
    cfg.test_size = 10;
    cfg.train.T = 1;
    cfg.train.epochs_warm = 2;
    cfg.train.epochs_update = 2;
    cfg.train.k_labeled = 1;
    cfg.train.k_unlabeled = 1;
    cfg.train.validation_size = 6;
    cfg.seeds = {1};
    cfg.sweep_h = 0.005;
    cfg.out_dir = out.string();
    return cfg;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(ENTANGLE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("preset resolution covers the paper experiments") {
    ExperimentConfig rho = resolve_preset("rho-s-30");
    CHECK(rho.family == "rho-s");
    CHECK(rho.l == 30);
    CHECK(rho.u == 60);
    CHECK(rho.test_size == 2000);
    CHECK(rho.train.k_labeled == 4);
    CHECK(rho.train.epochs_warm == 100);
    CHECK(rho.train.tau == 0.95);
    CHECK(rho.train.T == 30);
    CHECK(rho.seeds.size() == 5);

    ExperimentConfig full = resolve_preset("2q-full-500-K4");
    CHECK(full.l == 500);
    CHECK(full.u == 10000);
    CHECK(full.test_size == 6000);
    CHECK(full.train.epochs_warm == 150);
    CHECK(full.train.k_unlabeled == 4);

    ExperimentConfig k2 = resolve_preset("2q-full-2000-K2");
    CHECK(k2.train.epochs_warm == 150);
    CHECK(k2.train.k_labeled == 2);

    ExperimentConfig partial = resolve_preset("2q-partial-F1-500");
    CHECK(partial.scheme == FeatureScheme::F1);
    CHECK(partial.u == 5000);
    CHECK(partial.test_size == 1000);

    ExperimentConfig ghz3 = resolve_preset("ghz3-20");
    CHECK(ghz3.l == 21);  // rounded up to a multiple of the three classes
    CHECK(ghz3.u == 50);
    CHECK(ghz3.train.k_labeled == 2);
    CHECK(ghz3.train.k_unlabeled == 8);
    CHECK(ghz3.scheme == FeatureScheme::Pauli3);

    ExperimentConfig ghzn = resolve_preset("ghzN-k2-7-100");
    CHECK(ghzn.n == 7);
    CHECK(ghzn.l == 100);
    CHECK(ghzn.u == 200);
    CHECK(ghzn.train.k_labeled == 1);

    ExperimentConfig bound = resolve_preset("bound-n5-a34");
    CHECK(bound.fuzzy_a == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(bound.l == 200);
    CHECK(bound.u == 1000);
    CHECK(bound.train.k_labeled == 5);
    CHECK(bound.seeds.size() == 8);

    CHECK_THROWS_AS(resolve_preset("ghzN-k3-9-30"), ConfigError);
    CHECK_THROWS_AS(resolve_preset("nope"), ConfigError);
    for (const std::string& name : preset_names()) CHECK(resolve_preset(name).preset == name);
}

TEST_CASE("config json round trip preserves the digest") {
    ExperimentConfig cfg = resolve_preset("rho-s-30");
    std::string text = config_to_json(cfg);
    ExperimentConfig back = config_from_json(text);
    CHECK(config_digest(back) == config_digest(cfg));
    CHECK(back.family == cfg.family);
    CHECK(back.seeds == cfg.seeds);

    ExperimentConfig tweaked = config_from_json("{\"preset\": \"rho-s-30\", \"l\": 10}");
    CHECK(tweaked.l == 10);
    CHECK(tweaked.u == 60);
    CHECK(config_digest(tweaked) != config_digest(cfg));

    CHECK_THROWS_AS(config_from_json("{\"bogus\": 1}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
}

TEST_CASE("generate is deterministic and the manifest digests are honest") {
    fs::path out = fresh_dir("entangle_gen_test");
    ExperimentConfig cfg = tiny_ghzn(out);
    cmd_generate(cfg);

    fs::path dir = cfg.preset_dir();
    std::string manifest_text = slurp(dir / "manifest.json");
    std::string labeled_text = slurp(dir / "seed1" / "labeled.ds");
    CHECK(manifest_text.find(fnv1a_hex(labeled_text)) != std::string::npos);
    CHECK(manifest_text.find(config_digest(cfg)) != std::string::npos);

    cmd_generate(cfg);  // rerun overwrites with identical bytes
    CHECK(slurp(dir / "manifest.json") == manifest_text);
    CHECK(slurp(dir / "seed1" / "labeled.ds") == labeled_text);

    Dataset labeled = load_dataset(dir / "seed1" / "labeled.ds");
    CHECK(labeled.size() == 6);
    Dataset unlabeled = load_dataset(dir / "seed1" / "unlabeled.ds");
    CHECK(unlabeled.size() == 8);
    fs::remove_all(out);
}

TEST_CASE("train/eval pipeline with digest guards") {
    fs::path out = fresh_dir("entangle_pipe_test");
    ExperimentConfig cfg = tiny_ghzn(out);
    cmd_generate(cfg);
    cmd_train(cfg, Method::ssl, 2);
    cmd_train(cfg, Method::sl, 2);
    CHECK(fs::exists(cfg.preset_dir() / "seed1" / "model_ssl.mlp"));
    CHECK(fs::exists(cfg.preset_dir() / "seed2" / "run_ssl.json"));

    cmd_eval(cfg, Method::ssl, false);
    CHECK(fs::exists(cfg.preset_dir() / "seed1" / "metrics_ssl.json"));
    CHECK(fs::exists(cfg.preset_dir() / "seed1" / "roc_ssl.csv"));
    std::string summary = slurp(cfg.preset_dir() / "summary_ssl.json");
    CHECK(summary.find("overall_mean") != std::string::npos);

    // A config change flips the digest: train and eval must refuse it.
    ExperimentConfig changed = cfg;
    changed.train.tau = 0.99;
    CHECK_THROWS_AS(cmd_train(changed, Method::ssl, 1), ConfigError);
    CHECK_THROWS_AS(cmd_eval(changed, Method::ssl, false), ConfigError);
    cmd_eval(changed, Method::ssl, true);  // --force overrides

    // Evaluating an untrained method is a data error.
    CHECK_THROWS_AS(cmd_eval(cfg, Method::slk, false), DataError);

    // Tampered dataset files are caught by the manifest digest check.
    spit(cfg.preset_dir() / "seed1" / "labeled.ds", "dataset-v1 tampered\n");
    CHECK_THROWS_AS(cmd_train(cfg, Method::slk, 1), DataError);
    fs::remove_all(out);
}

TEST_CASE("train reruns write byte-identical models and metrics") {
    fs::path out = fresh_dir("entangle_det_test");
    ExperimentConfig cfg = tiny_ghzn(out);
    cfg.seeds = {1};
    cmd_generate(cfg);
    cmd_train(cfg, Method::ssl, 1);
    cmd_eval(cfg, Method::ssl, false);
    std::string model = slurp(cfg.preset_dir() / "seed1" / "model_ssl.mlp");
    std::string metrics = slurp(cfg.preset_dir() / "seed1" / "metrics_ssl.json");

    cmd_train(cfg, Method::ssl, 1);
    cmd_eval(cfg, Method::ssl, false);
    CHECK(slurp(cfg.preset_dir() / "seed1" / "model_ssl.mlp") == model);
    CHECK(slurp(cfg.preset_dir() / "seed1" / "metrics_ssl.json") == metrics);
    fs::remove_all(out);
}

TEST_CASE("sweep-bound emits per-seed bounds and both RE statistics") {
    fs::path out = fresh_dir("entangle_sweep_test");
    ExperimentConfig cfg = tiny_bound(out);
    cmd_generate(cfg);
    cmd_train(cfg, Method::ssl, 1);
    cmd_train(cfg, Method::slk, 1);
    cmd_sweep_bound(cfg, 1, false);
    std::string bounds = slurp(cfg.preset_dir() / "bounds_ssl.json");
    CHECK(bounds.find("per_seed") != std::string::npos);
    CHECK(bounds.find("reference_b3") != std::string::npos);
    CHECK(fs::exists(cfg.preset_dir() / "seed1" / "bound_slk.csv"));

    ExperimentConfig not_bound = tiny_ghzn(out / "other");
    CHECK_THROWS_AS(cmd_sweep_bound(not_bound, 1, false), ConfigError);
    fs::remove_all(out);
}

TEST_CASE("CLI end to end: exit codes and artifacts") {
    fs::path out = fresh_dir("entangle_cli_test");
    fs::path config_path = out / "cfg.json";
    spit(config_path, config_to_json(tiny_ghzn(out)));

    CHECK(run_cli("--list-presets") == 0);
    CHECK(run_cli("generate") == 1);                       // missing --config/--preset
    CHECK(run_cli("generate --preset nope") == 1);         // unknown preset
    CHECK(run_cli("eval --config " + config_path.string() + " --method ssl") == 2);

    CHECK(run_cli("generate --config " + config_path.string()) == 0);
    CHECK(run_cli("train --config " + config_path.string() + " --method ssl --jobs 2") == 0);
    CHECK(run_cli("eval --config " + config_path.string() + " --method ssl") == 0);
    CHECK(fs::exists(out / "ghzN-k2-4-30" / "summary_ssl.json"));

    // --seed-list narrows the run; digest mismatch is a config error (1).
    CHECK(run_cli("train --config " + config_path.string() +
                  " --method ssl --seed-list 1,2,3") == 1);
    fs::remove_all(out);
}
