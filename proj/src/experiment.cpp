#include "entangle/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "entangle/errors.hpp"
#include "entangle/eval.hpp"

namespace entangle::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

std::string method_name(Method m) {
    switch (m) {
        case Method::sl: return "sl";
        case Method::slk: return "slk";
        case Method::ssl: return "ssl";
    }
    throw ConfigError("unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "sl") return Method::sl;
    if (name == "slk") return Method::slk;
    if (name == "ssl") return Method::ssl;
    throw ConfigError("unknown method: " + name + " (expected sl|slk|ssl)");
}

namespace {

int epochs_2q(int l, int k) {
    if (l <= 200) return 100;
    if (k <= 2) return l <= 1000 ? 100 : 150;
    if (l <= 1000) return 150;
    return l <= 2000 ? 200 : 250;
}

int validation_count(int l, int classes) {
    int v = std::max(l, 200);
    return (v + classes - 1) / classes * classes;
}

std::vector<std::uint64_t> seed_range(int count) {
    std::vector<std::uint64_t> s;
    for (int i = 1; i <= count; ++i) s.push_back(static_cast<std::uint64_t>(i));
    return s;
}

std::vector<std::string> split_dashes(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find('-', start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

int parse_int(const std::string& tok, const std::string& what) {
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
        throw ConfigError("bad " + what + " in preset name: '" + tok + "'");
    return static_cast<int>(v);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string json_dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void ExperimentConfig::validate() const {
    if (family != "2q" && family != "rho-s" && family != "ghz3" && family != "ghzN" &&
        family != "bound")
        throw ConfigError("unknown experiment family: " + family);
    if (seeds.empty()) throw ConfigError("seed list must be non-empty");
    if (l < 2 || u < 0 || test_size < 2) throw ConfigError("bad dataset sizes");
    if (family == "ghz3" && scheme != FeatureScheme::Pauli3)
        throw ConfigError("ghz3 experiments use the 64-entry Pauli features");
    if ((family == "ghzN" || family == "bound") && scheme != FeatureScheme::GhzMxMz)
        throw ConfigError("n-qubit GHZ experiments use the (Mx, Mz) features");
    if ((family == "2q" || family == "rho-s") &&
        (scheme != FeatureScheme::F && scheme != FeatureScheme::F1 &&
         scheme != FeatureScheme::F2))
        throw ConfigError("two-qubit experiments use the F/F1/F2 features");
    train.validate();
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (int l : {500, 1000, 2000, 4000})
        for (int k : {2, 4}) names.push_back("2q-full-" + std::to_string(l) + "-K" + std::to_string(k));
    for (const char* f : {"F1", "F2"})
        for (int l : {500, 2000}) names.push_back(std::string("2q-partial-") + f + "-" + std::to_string(l));
    for (int l : {30, 100}) names.push_back("rho-s-" + std::to_string(l));
    for (int l : {20, 50, 100, 200}) names.push_back("ghz3-" + std::to_string(l));
    for (int k : {2, 3, 4})
        for (int n = 4; n <= (k == 2 ? 10 : 7); ++n)
            for (int l : {30, 100})
                names.push_back("ghzN-k" + std::to_string(k) + "-" + std::to_string(n) + "-" +
                                std::to_string(l));
    for (int n = 4; n <= 7; ++n)
        for (const char* a : {"78", "34", "12"})
            names.push_back("bound-n" + std::to_string(n) + "-a" + a);
    return names;
}

ExperimentConfig resolve_preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.preset = name;
    cfg.train.tau = 0.95;
    cfg.train.T = 30;
    cfg.train.lr = 0.003;
    cfg.train.batch = 64;

    std::vector<std::string> tok = split_dashes(name);
    auto fail = [&]() -> ExperimentConfig& {
        throw ConfigError("unknown preset: " + name);
    };

    if (tok.size() == 4 && tok[0] == "2q" && tok[1] == "full") {
        int l = parse_int(tok[2], "l");
        if (tok[3].size() < 2 || tok[3][0] != 'K') fail();
        int k = parse_int(tok[3].substr(1), "K");
        if ((l != 500 && l != 1000 && l != 2000 && l != 4000) || (k != 2 && k != 4)) fail();
        cfg.family = "2q";
        cfg.scheme = FeatureScheme::F;
        cfg.n = 2;
        cfg.l = l;
        cfg.u = 20 * l;
        cfg.test_size = 6000;
        cfg.train.k_labeled = cfg.train.k_unlabeled = k;
        cfg.train.epochs_warm = cfg.train.epochs_update = epochs_2q(l, k);
        cfg.seeds = seed_range(3);
    } else if (tok.size() == 4 && tok[0] == "2q" && tok[1] == "partial") {
        FeatureScheme scheme = scheme_from_name(tok[2]);
        int l = parse_int(tok[3], "l");
        if ((scheme != FeatureScheme::F1 && scheme != FeatureScheme::F2) ||
            (l != 500 && l != 2000))
            fail();
        cfg.family = "2q";
        cfg.scheme = scheme;
        cfg.n = 2;
        cfg.l = l;
        cfg.u = 10 * l;
        cfg.test_size = 2 * l;
        cfg.train.k_labeled = cfg.train.k_unlabeled = 4;
        cfg.train.epochs_warm = cfg.train.epochs_update = epochs_2q(l, 4);
        cfg.seeds = seed_range(3);
    } else if (tok.size() == 3 && tok[0] == "rho" && tok[1] == "s") {
        int l = parse_int(tok[2], "l");
        if (l != 30 && l != 100) fail();
        cfg.family = "rho-s";
        cfg.scheme = FeatureScheme::F;
        cfg.n = 2;
        cfg.l = l;
        cfg.u = 2 * l;
        cfg.test_size = 2000;
        cfg.train.k_labeled = cfg.train.k_unlabeled = 4;
        cfg.train.epochs_warm = cfg.train.epochs_update = 100;
        cfg.seeds = seed_range(5);
    } else if (tok.size() == 2 && tok[0] == "ghz3") {
        int l = parse_int(tok[1], "l");
        cfg.family = "ghz3";
        cfg.scheme = FeatureScheme::Pauli3;
        cfg.n = 3;
        // The paper's l = 20/50/100/200 rounded up to multiples of the three
        // classes so labeled sets balance exactly.
        if (l == 20) cfg.l = 21, cfg.u = 50;
        else if (l == 50) cfg.l = 51, cfg.u = 150;
        else if (l == 100) cfg.l = 102, cfg.u = 1000;
        else if (l == 200) cfg.l = 201, cfg.u = 2000;
        else fail();
        cfg.test_size = 6000;
        cfg.train.k_labeled = 2;
        cfg.train.k_unlabeled = 8;
        cfg.train.epochs_warm = cfg.train.epochs_update = 100;
        cfg.seeds = seed_range(5);
    } else if (tok.size() == 4 && tok[0] == "ghzN") {
        if (tok[1].size() < 2 || tok[1][0] != 'k') fail();
        int k = parse_int(tok[1].substr(1), "k");
        int n = parse_int(tok[2], "n");
        int l = parse_int(tok[3], "l");
        if (k < 2 || k > 4 || n < 4 || n > 10 || (k > 2 && n > 7) || (l != 30 && l != 100))
            fail();
        cfg.family = "ghzN";
        cfg.scheme = FeatureScheme::GhzMxMz;
        cfg.n = n;
        cfg.k = k;
        cfg.l = l;
        cfg.u = 2 * l;
        cfg.test_size = 2000;
        cfg.train.k_labeled = cfg.train.k_unlabeled = 1;
        cfg.train.epochs_warm = cfg.train.epochs_update = 100;
        cfg.seeds = seed_range(5);
    } else if (tok.size() == 3 && tok[0] == "bound") {
        if (tok[1].size() < 2 || tok[1][0] != 'n' || tok[2].size() < 2 || tok[2][0] != 'a') fail();
        int n = parse_int(tok[1].substr(1), "n");
        std::string a = tok[2].substr(1);
        if (n < 4 || n > 7) fail();
        cfg.family = "bound";
        cfg.scheme = FeatureScheme::GhzMxMz;
        cfg.n = n;
        if (a == "78") cfg.fuzzy_a = 7.0 / 8.0;
        else if (a == "34") cfg.fuzzy_a = 3.0 / 4.0;
        else if (a == "12") cfg.fuzzy_a = 1.0 / 2.0;
        else fail();
        cfg.l = 200;
        cfg.u = 1000;
        cfg.test_size = 2000;
        cfg.train.k_labeled = cfg.train.k_unlabeled = 5;
        cfg.train.epochs_warm = cfg.train.epochs_update = 100;
        cfg.seeds = seed_range(8);
        cfg.sweep_h = 0.0005;
    } else {
        fail();
    }

    cfg.train.scheme = cfg.scheme;
    int classes = cfg.family == "ghz3" ? 3 : 2;
    cfg.train.validation_size = validation_count(cfg.l, classes);
    return cfg;
}

namespace {

json config_json_object(const ExperimentConfig& cfg, bool with_out_dir) {
    json j;
    j["preset"] = cfg.preset;
    j["family"] = cfg.family;
    j["scheme"] = scheme_name(cfg.scheme);
    j["n"] = cfg.n;
    j["k"] = cfg.k;
    j["fuzzy_a"] = cfg.fuzzy_a;
    j["l"] = cfg.l;
    j["u"] = cfg.u;
    j["test_size"] = cfg.test_size;
    j["tau"] = cfg.train.tau;
    j["T"] = cfg.train.T;
    j["k_labeled"] = cfg.train.k_labeled;
    j["k_unlabeled"] = cfg.train.k_unlabeled;
    j["schedule_a"] = cfg.train.schedule_a;
    j["schedule_b"] = cfg.train.schedule_b;
    j["lr"] = cfg.train.lr;
    j["epochs_warm"] = cfg.train.epochs_warm;
    j["epochs_update"] = cfg.train.epochs_update;
    j["batch"] = cfg.train.batch;
    j["validation_size"] = cfg.train.validation_size;
    j["seeds"] = cfg.seeds;
    j["sweep_h"] = cfg.sweep_h;
    if (with_out_dir) j["out_dir"] = cfg.out_dir;
    return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
    return json_dump(config_json_object(cfg, true));
}

ExperimentConfig config_from_json(const std::string& text, const std::string& base_preset) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    if (j.contains("preset")) cfg = resolve_preset(j.at("preset").get<std::string>());
    else if (!base_preset.empty()) cfg = resolve_preset(base_preset);

    static const char* known[] = {"preset",       "family",      "scheme",        "n",
                                  "k",            "fuzzy_a",     "l",             "u",
                                  "test_size",    "tau",         "T",             "k_labeled",
                                  "k_unlabeled",  "schedule_a",  "schedule_b",    "lr",
                                  "epochs_warm",  "epochs_update", "batch",
                                  "validation_size", "seeds",    "sweep_h",       "out_dir"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown config key: " + it.key());
    }

    if (j.contains("family")) cfg.family = j.at("family").get<std::string>();
    if (j.contains("scheme")) cfg.scheme = scheme_from_name(j.at("scheme").get<std::string>());
    if (j.contains("n")) cfg.n = j.at("n").get<int>();
    if (j.contains("k")) cfg.k = j.at("k").get<int>();
    if (j.contains("fuzzy_a")) cfg.fuzzy_a = j.at("fuzzy_a").get<double>();
    if (j.contains("l")) cfg.l = j.at("l").get<int>();
    if (j.contains("u")) cfg.u = j.at("u").get<int>();
    if (j.contains("test_size")) cfg.test_size = j.at("test_size").get<int>();
    if (j.contains("tau")) cfg.train.tau = j.at("tau").get<double>();
    if (j.contains("T")) cfg.train.T = j.at("T").get<int>();
    if (j.contains("k_labeled")) cfg.train.k_labeled = j.at("k_labeled").get<int>();
    if (j.contains("k_unlabeled")) cfg.train.k_unlabeled = j.at("k_unlabeled").get<int>();
    if (j.contains("schedule_a")) cfg.train.schedule_a = j.at("schedule_a").get<double>();
    if (j.contains("schedule_b")) cfg.train.schedule_b = j.at("schedule_b").get<double>();
    if (j.contains("lr")) cfg.train.lr = j.at("lr").get<double>();
    if (j.contains("epochs_warm")) cfg.train.epochs_warm = j.at("epochs_warm").get<int>();
    if (j.contains("epochs_update")) cfg.train.epochs_update = j.at("epochs_update").get<int>();
    if (j.contains("batch")) cfg.train.batch = j.at("batch").get<int>();
    if (j.contains("validation_size"))
        cfg.train.validation_size = j.at("validation_size").get<int>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("sweep_h")) cfg.sweep_h = j.at("sweep_h").get<double>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.train.scheme = cfg.scheme;
    return cfg;
}

std::string config_digest(const ExperimentConfig& cfg) {
    return fnv1a_hex(config_json_object(cfg, false).dump());
}

SeedData datasets_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng root(seed);
    SeedData data;
    const int vs = cfg.train.validation_size;
    if (cfg.family == "2q") {
        Rng r1 = root.substream(11), r2 = root.substream(12), r3 = root.substream(13),
            r4 = root.substream(14);
        data.labeled = datagen::gen_labeled_2q(cfg.l, cfg.scheme, r1);
        data.unlabeled = datagen::gen_unlabeled_2q(cfg.u, cfg.scheme, r2);
        data.validation = datagen::gen_labeled_2q(vs, cfg.scheme, r3);
        data.test = datagen::gen_labeled_2q(cfg.test_size, cfg.scheme, r4);
    } else if (cfg.family == "rho-s") {
        Rng r1 = root.substream(11), r2 = root.substream(12), r3 = root.substream(13),
            r4 = root.substream(14);
        data.labeled = datagen::gen_labeled_2q(cfg.l, cfg.scheme, r1);
        data.unlabeled = datagen::gen_rho_s_set(cfg.u, false, cfg.scheme, r2);
        data.validation = datagen::gen_rho_s_set(vs, true, cfg.scheme, r3);
        data.test = datagen::gen_rho_s_set(cfg.test_size, true, cfg.scheme, r4);
    } else if (cfg.family == "ghz3") {
        datagen::GhzTask task{3, datagen::GhzTask::Mode::three_class, 2, 0.0};
        Rng r1 = root.substream(11), r3 = root.substream(13), r4 = root.substream(14),
            r5 = root.substream(15);
        auto [lab, unlab] = datagen::gen_ghz_sets(task, cfg.l, cfg.u, r1);
        data.labeled = std::move(lab);
        data.unlabeled = std::move(unlab);
        data.validation = datagen::gen_ghz_test_plain(task, vs, r3);
        data.test = datagen::gen_ghz_test_plain(task, cfg.test_size, r4);
        data.test_class = datagen::ghz_class_test_set(cfg.test_size, r5);
    } else if (cfg.family == "ghzN") {
        datagen::GhzTask task{cfg.n, datagen::GhzTask::Mode::binary_k, cfg.k, 0.0};
        Rng r1 = root.substream(11), r3 = root.substream(13), r4 = root.substream(14);
        auto [lab, unlab] = datagen::gen_ghz_sets(task, cfg.l, cfg.u, r1);
        data.labeled = std::move(lab);
        data.unlabeled = std::move(unlab);
        data.validation = datagen::gen_ghz_test_plain(task, vs, r3);
        data.test = datagen::gen_ghz_test_plain(task, cfg.test_size, r4);
    } else if (cfg.family == "bound") {
        datagen::GhzTask task{cfg.n, datagen::GhzTask::Mode::fuzzy_3sep, 2, cfg.fuzzy_a};
        Rng r1 = root.substream(11), r3 = root.substream(13), r4 = root.substream(14),
            c3 = root.substream(23), c4 = root.substream(24);
        auto [lab, unlab] = datagen::gen_fuzzy_3sep(cfg.n, cfg.fuzzy_a, cfg.l, cfg.u, r1);
        data.labeled = std::move(lab);
        data.unlabeled = std::move(unlab);
        // Per the bound-task protocol, validation and test states are
        // conjugated once.
        data.validation = datagen::conjugate_dataset_once(
            datagen::gen_ghz_test_plain(task, vs, r3), c3, cfg.scheme);
        data.test = datagen::conjugate_dataset_once(
            datagen::gen_ghz_test_plain(task, cfg.test_size, r4), c4, cfg.scheme);
    }
    return data;
}

namespace {

std::string seed_dir_name(std::uint64_t seed) { return "seed" + std::to_string(seed); }

struct SeedFiles {
    std::vector<std::pair<std::string, const Dataset*>> entries;
};

json load_manifest(const ExperimentConfig& cfg) {
    fs::path path = cfg.preset_dir() / "manifest.json";
    if (!fs::exists(path))
        throw DataError("missing manifest (run `generate` first): " + path.string());
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw DataError(std::string("manifest parse error: ") + e.what());
    }
}

void check_manifest_digest(const ExperimentConfig& cfg, const json& manifest, bool force) {
    std::string want = config_digest(cfg);
    std::string have = manifest.value("config_digest", "");
    if (want != have && !force)
        throw ConfigError("config digest mismatch: resolved config is " + want +
                          " but generated data carries " + have + " (use --force to override)");
}

void check_dataset_digests(const ExperimentConfig& cfg, const json& manifest) {
    for (auto it = manifest.at("files").begin(); it != manifest.at("files").end(); ++it) {
        fs::path path = cfg.preset_dir() / it.key();
        if (!fs::exists(path)) throw DataError("missing dataset file: " + path.string());
        if (fnv1a_hex(read_text(path)) != it.value().get<std::string>())
            throw DataError("dataset file digest mismatch: " + path.string());
    }
}

// Run fn(seed) over the seed list with at most `jobs` workers; the gemm worker
// cap is divided among concurrent runs. Results are identical for any jobs
// value.
void run_over_seeds(const ExperimentConfig& cfg, int jobs,
                    const std::function<void(std::uint64_t)>& fn) {
    const int hw = std::max(1u, std::thread::hardware_concurrency());
    const int active = std::max(1, std::min<int>(jobs, static_cast<int>(cfg.seeds.size())));
    nn::set_gemm_threads(std::max(1, hw / active));
    if (active == 1) {
        for (std::uint64_t s : cfg.seeds) fn(s);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < active; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cfg.seeds.size()) return;
                try {
                    fn(cfg.seeds[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

json accuracy_json(const eval::Accuracy& acc) {
    json j;
    j["overall"] = acc.overall;
    j["per_class"] = acc.per_class;
    return j;
}

// Scores for the positive (entangled / nonseparable) class.
std::vector<double> positive_scores(const nn::Mlp& m, const Dataset& test) {
    nn::RealMatrix x(test.size(), test.feature_dim);
    for (std::size_t i = 0; i < test.size(); ++i)
        std::copy(test.samples[i].features.begin(), test.samples[i].features.end(), x.row(i));
    nn::RealMatrix probs = nn::forward_batch(m, x);
    std::vector<double> out(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) out[i] = probs(i, probs.cols - 1);
    return out;
}

std::vector<int> binary_labels(const Dataset& test) {
    std::vector<int> out;
    out.reserve(test.size());
    for (const Sample& s : test.samples) out.push_back(*s.label);
    return out;
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::path dir = cfg.preset_dir();
    fs::create_directories(dir);
    json files = json::object();
    for (std::uint64_t seed : cfg.seeds) {
        fs::path sd = dir / seed_dir_name(seed);
        fs::create_directories(sd);
        SeedData data = datasets_for_seed(cfg, seed);
        std::vector<std::pair<std::string, const Dataset*>> entries = {
            {"labeled.ds", &data.labeled},
            {"unlabeled.ds", &data.unlabeled},
            {"validation.ds", &data.validation},
            {"test.ds", &data.test}};
        if (data.test_class) entries.emplace_back("test_class.ds", &*data.test_class);
        for (const auto& [name, ds] : entries) {
            std::string text = dataset_to_string(*ds);
            write_text(sd / name, text);
            files[seed_dir_name(seed) + "/" + name] = fnv1a_hex(text);
        }
    }
    json manifest;
    manifest["preset"] = cfg.preset;
    manifest["config"] = config_json_object(cfg, true);
    manifest["config_digest"] = config_digest(cfg);
    manifest["files"] = files;
    write_text(dir / "manifest.json", json_dump(manifest));
}

void cmd_train(const ExperimentConfig& cfg, Method method, int jobs, bool force) {
    cfg.validate();
    json manifest = load_manifest(cfg);
    check_manifest_digest(cfg, manifest, force);
    check_dataset_digests(cfg, manifest);
    const std::string digest = config_digest(cfg);

    run_over_seeds(cfg, jobs, [&](std::uint64_t seed) {
        fs::path sd = cfg.preset_dir() / seed_dir_name(seed);
        Dataset labeled = load_dataset(sd / "labeled.ds");
        Dataset unlabeled = load_dataset(sd / "unlabeled.ds");
        Dataset validation = load_dataset(sd / "validation.ds");

        ssl::TrainConfig tcfg = cfg.train;
        tcfg.seed = seed;
        tcfg.scheme = cfg.scheme;

        auto start = std::chrono::steady_clock::now();
        json report;
        report["config_digest"] = digest;
        report["method"] = method_name(method);
        report["seed"] = seed;
        nn::Mlp model;
        if (method == Method::ssl) {
            ssl::SslRun run = ssl::ssl_train(labeled, unlabeled, validation, tcfg);
            model = run.selected_model();
            report["validation_accuracy"] = run.validation_accuracy;
            report["pseudo_counts"] = run.pseudo_counts;
            report["selected"] = run.selected;
            report["step_seconds"] = run.step_seconds;
        } else if (method == Method::slk) {
            model = ssl::slk_train(labeled, tcfg);
        } else {
            model = ssl::sl_train(labeled, tcfg);
        }
        report["total_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        nn::save_model(model, sd / ("model_" + method_name(method) + ".mlp"));
        write_text(sd / ("run_" + method_name(method) + ".json"), json_dump(report));
    });
}

namespace {

json eval_one_test(const nn::Mlp& model, const Dataset& test, const fs::path& sd,
                   const std::string& stem) {
    json j = accuracy_json(eval::accuracy(model, test));
    if (test.class_count == 2) {
        eval::RocCurve roc = eval::roc_auc(positive_scores(model, test), binary_labels(test));
        j["auc"] = roc.auc;
        write_text(sd / (stem + ".csv"), eval::roc_csv(roc));
    } else {
        eval::RocCurve micro = eval::micro_roc(model, test);
        j["auc_micro"] = micro.auc;
        write_text(sd / (stem + "_micro.csv"), eval::roc_csv(micro));
        nn::RealMatrix x(test.size(), test.feature_dim);
        for (std::size_t i = 0; i < test.size(); ++i)
            std::copy(test.samples[i].features.begin(), test.samples[i].features.end(),
                      x.row(i));
        nn::RealMatrix probs = nn::forward_batch(model, x);
        std::vector<double> aucs;
        for (int c = 0; c < test.class_count; ++c) {
            std::vector<double> scores(test.size());
            std::vector<int> labels(test.size());
            for (std::size_t i = 0; i < test.size(); ++i) {
                scores[i] = probs(i, static_cast<std::size_t>(c));
                labels[i] = *test.samples[i].label == c ? 1 : 0;
            }
            eval::RocCurve roc = eval::roc_auc(scores, labels);
            aucs.push_back(roc.auc);
            write_text(sd / (stem + "_class" + std::to_string(c) + ".csv"),
                       eval::roc_csv(roc));
        }
        j["auc_class"] = aucs;
    }
    return j;
}

}  // namespace

void cmd_eval(const ExperimentConfig& cfg, Method method, bool force) {
    cfg.validate();
    json manifest = load_manifest(cfg);
    check_manifest_digest(cfg, manifest, force);
    const std::string digest = config_digest(cfg);
    const std::string mname = method_name(method);

    std::vector<double> overalls, aucs;
    for (std::uint64_t seed : cfg.seeds) {
        fs::path sd = cfg.preset_dir() / seed_dir_name(seed);
        fs::path report_path = sd / ("run_" + mname + ".json");
        if (!fs::exists(report_path))
            throw DataError("missing run report (train first): " + report_path.string());
        json report = json::parse(read_text(report_path));
        if (report.value("config_digest", "") != manifest.value("config_digest", "") && !force)
            throw ConfigError("model was trained under a different config digest (use --force)");

        nn::Mlp model = nn::load_model(sd / ("model_" + mname + ".mlp"));
        Dataset test = load_dataset(sd / "test.ds");
        if (static_cast<std::size_t>(model.input_dim()) != test.feature_dim)
            throw DataError("feature dimension mismatch: model expects " +
                            std::to_string(model.input_dim()) + " but test set has " +
                            std::to_string(test.feature_dim));

        json metrics;
        metrics["config_digest"] = digest;
        metrics["method"] = mname;
        metrics["seed"] = seed;
        metrics["test"] = eval_one_test(model, test, sd, "roc_" + mname);
        fs::path class_path = sd / "test_class.ds";
        if (fs::exists(class_path))
            metrics["test_class"] =
                eval_one_test(model, load_dataset(class_path), sd, "roc_" + mname + "_ghzclass");
        write_text(sd / ("metrics_" + mname + ".json"), json_dump(metrics));

        overalls.push_back(metrics["test"]["overall"].get<double>());
        if (metrics["test"].contains("auc")) aucs.push_back(metrics["test"]["auc"].get<double>());
        else aucs.push_back(metrics["test"]["auc_micro"].get<double>());
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
        double m = mean(v), s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size()));
    };
    json summary;
    summary["config_digest"] = digest;
    summary["method"] = mname;
    summary["seeds"] = cfg.seeds;
    summary["overall"] = overalls;
    summary["overall_mean"] = mean(overalls);
    summary["overall_std"] = stddev(overalls);
    summary["auc"] = aucs;
    summary["auc_mean"] = mean(aucs);
    summary["auc_std"] = stddev(aucs);
    write_text(cfg.preset_dir() / ("summary_" + mname + ".json"), json_dump(summary));
}

void cmd_sweep_bound(const ExperimentConfig& cfg, int jobs, bool force) {
    cfg.validate();
    if (cfg.family != "bound")
        throw ConfigError("sweep-bound requires a bound-family config");
    json manifest = load_manifest(cfg);
    check_manifest_digest(cfg, manifest, force);
    const std::string digest = config_digest(cfg);
    (void)jobs;  // the sweep is cheap; run serially for simple deterministic output

    for (Method method : {Method::slk, Method::ssl}) {
        const std::string mname = method_name(method);
        json per_seed = json::array();
        std::vector<double> b_hats, res;
        std::optional<double> reference;
        for (std::uint64_t seed : cfg.seeds) {
            fs::path sd = cfg.preset_dir() / seed_dir_name(seed);
            fs::path model_path = sd / ("model_" + mname + ".mlp");
            if (!fs::exists(model_path))
                throw DataError("missing trained model: " + model_path.string());
            nn::Mlp model = nn::load_model(model_path);
            Rng rng = Rng(seed).substream(0xB0);
            eval::BoundEstimate est =
                eval::estimate_bound(model, cfg.n, cfg.sweep_h, cfg.scheme, rng);
            json e;
            e["seed"] = seed;
            e["found"] = est.found;
            if (est.found) {
                e["b_hat"] = est.b_hat;
                e["interval_index"] = est.interval_index;
                if (est.rel_error) e["rel_error"] = *est.rel_error;
                b_hats.push_back(est.b_hat);
                if (est.rel_error) res.push_back(*est.rel_error);
                if (est.reference) reference = est.reference;
            }
            per_seed.push_back(e);
            write_text(sd / ("bound_" + mname + ".csv"), eval::bound_csv(est));
        }
        json out;
        out["config_digest"] = digest;
        out["method"] = mname;
        out["h"] = cfg.sweep_h;
        out["per_seed"] = per_seed;
        if (reference) out["reference_b3"] = *reference;
        if (!b_hats.empty()) {
            double mean_b = 0.0;
            for (double b : b_hats) mean_b += b;
            mean_b /= static_cast<double>(b_hats.size());
            out["mean_b_hat"] = mean_b;
            if (reference) out["re_of_mean"] = eval::relative_error(mean_b, *reference);
            if (!res.empty()) {
                double mean_re = 0.0;
                for (double r : res) mean_re += r;
                out["mean_re"] = mean_re / static_cast<double>(res.size());
            }
        }
        write_text(cfg.preset_dir() / ("bounds_" + mname + ".json"), json_dump(out));
    }
}

}  // namespace entangle::experiment
