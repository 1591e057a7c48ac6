#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "entangle/errors.hpp"
#include "entangle/experiment.hpp"

namespace {

using namespace entangle;

int default_jobs() {
    if (const char* env = std::getenv("ENTANGLE_SSL_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string method = "ssl";
    std::string seed_list;
    std::string out_dir;
    int jobs = default_jobs();
    bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_method) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--preset", args.preset, "preset name (see --list-presets)");
    if (with_method)
        cmd->add_option("--method", args.method, "training method: sl|slk|ssl")
            ->check(CLI::IsMember({"sl", "slk", "ssl"}));
    cmd->add_option("--seed-list", args.seed_list, "comma-separated seeds (overrides config)");
    cmd->add_option("--jobs", args.jobs, "max parallel seed runs (env ENTANGLE_SSL_THREADS)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_flag("--force", args.force, "ignore config digest mismatches");
}

experiment::ExperimentConfig resolve(const CommonArgs& args) {
    if (args.config_path.empty() && args.preset.empty())
        throw ConfigError("either --config or --preset is required");

    experiment::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ConfigError("cannot open config file: " + args.config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        // --preset supplies the base; the config file holds overrides.
        cfg = experiment::config_from_json(buf.str(), args.preset);
    } else {
        cfg = experiment::resolve_preset(args.preset);
    }
    if (!args.seed_list.empty()) {
        cfg.seeds.clear();
        std::stringstream ss(args.seed_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            cfg.seeds.push_back(std::strtoull(tok.c_str(), nullptr, 10));
        }
        if (cfg.seeds.empty()) throw ConfigError("--seed-list produced no seeds");
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entangle-ssl: semi-supervised entanglement classification experiments"};
    app.require_subcommand(0, 1);

    bool list_presets = false;
    app.add_flag("--list-presets", list_presets, "print available preset names and exit");

    CommonArgs gen_args, train_args, eval_args, sweep_args;
    CLI::App* gen = app.add_subcommand("generate", "generate datasets and a manifest");
    add_common(gen, gen_args, false);
    CLI::App* train = app.add_subcommand("train", "train models for every seed");
    add_common(train, train_args, true);
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate trained models on the test sets");
    add_common(eval_cmd, eval_args, true);
    CLI::App* sweep = app.add_subcommand("sweep-bound", "estimate separability bounds");
    add_common(sweep, sweep_args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (list_presets) {
            for (const std::string& name : experiment::preset_names())
                std::cout << name << "\n";
            return 0;
        }
        if (gen->parsed()) {
            experiment::cmd_generate(resolve(gen_args));
        } else if (train->parsed()) {
            experiment::cmd_train(resolve(train_args),
                                  experiment::method_from_name(train_args.method),
                                  train_args.jobs, train_args.force);
        } else if (eval_cmd->parsed()) {
            experiment::cmd_eval(resolve(eval_args),
                                 experiment::method_from_name(eval_args.method),
                                 eval_args.force);
        } else if (sweep->parsed()) {
            experiment::cmd_sweep_bound(resolve(sweep_args), sweep_args.jobs, sweep_args.force);
        } else {
            std::cerr << app.help() << std::endl;
            return 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << std::endl;
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
