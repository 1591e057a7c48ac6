#include "entangle/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "entangle/errors.hpp"

namespace entangle {

std::size_t scheme_dim(FeatureScheme s) {
    switch (s) {
        case FeatureScheme::F: return 16;
        case FeatureScheme::F1: return 9;
        case FeatureScheme::F2: return 6;
        case FeatureScheme::Pauli3: return 64;
        case FeatureScheme::GhzMxMz: return 2;
    }
    throw ConfigError("unknown feature scheme");
}

std::string scheme_name(FeatureScheme s) {
    switch (s) {
        case FeatureScheme::F: return "F";
        case FeatureScheme::F1: return "F1";
        case FeatureScheme::F2: return "F2";
        case FeatureScheme::Pauli3: return "pauli3";
        case FeatureScheme::GhzMxMz: return "mxmz";
    }
    throw ConfigError("unknown feature scheme");
}

FeatureScheme scheme_from_name(const std::string& name) {
    if (name == "F") return FeatureScheme::F;
    if (name == "F1") return FeatureScheme::F1;
    if (name == "F2") return FeatureScheme::F2;
    if (name == "pauli3") return FeatureScheme::Pauli3;
    if (name == "mxmz") return FeatureScheme::GhzMxMz;
    throw ConfigError("unknown feature scheme name: " + name);
}

std::vector<double> Sample::one_hot(int class_count) const {
    std::vector<double> y(class_count, 0.0);
    if (!label) throw DataError("one_hot: sample has no label");
    if (*label < 0 || *label >= class_count) throw DataError("one_hot: label out of range");
    y[*label] = 1.0;
    return y;
}

void Dataset::check_consistent() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        if (s.features.size() != feature_dim)
            throw DataError("sample " + std::to_string(i) + ": feature dimension mismatch");
        for (double v : s.features)
            if (!std::isfinite(v))
                throw NumericError("sample " + std::to_string(i) + ": non-finite feature");
        if (s.label && (*s.label < 0 || *s.label >= class_count))
            throw DataError("sample " + std::to_string(i) + ": label out of range");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string source_tag(const Sample& s) {
    switch (s.source) {
        case SampleSource::labeled: return "labeled";
        case SampleSource::unlabeled: return "unlabeled";
        case SampleSource::guess_labeled: return "guess-labeled";
        case SampleSource::augmented: return "augmented-from:" + std::to_string(s.parent);
    }
    throw DataError("unknown sample source");
}

void parse_source(const std::string& tag, Sample& s, std::size_t line) {
    if (tag == "labeled") {
        s.source = SampleSource::labeled;
    } else if (tag == "unlabeled") {
        s.source = SampleSource::unlabeled;
    } else if (tag == "guess-labeled") {
        s.source = SampleSource::guess_labeled;
    } else if (tag.rfind("augmented-from:", 0) == 0) {
        s.source = SampleSource::augmented;
        s.parent = std::atoi(tag.c_str() + 15);
    } else {
        throw DataError("line " + std::to_string(line) + ": unknown source tag '" + tag + "'");
    }
}

std::string params_string(const StateParams& p) {
    if (p.empty()) return "-";
    std::string out;
    auto add = [&out](const std::string& kv) {
        if (!out.empty()) out += ',';
        out += kv;
    };
    if (!p.family.empty()) add("family=" + p.family);
    if (p.n) add("n=" + std::to_string(*p.n));
    if (p.p) add("p=" + format_double(*p.p));
    if (p.theta) add("theta=" + format_double(*p.theta));
    if (p.truth) add("truth=" + std::to_string(*p.truth));
    if (p.rho) {
        std::string m = "rho=" + std::to_string(p.rho->rows()) + "x" + std::to_string(p.rho->cols());
        for (std::size_t i = 0; i < p.rho->rows(); ++i)
            for (std::size_t j = 0; j < p.rho->cols(); ++j) {
                const cxd& v = (*p.rho)(i, j);
                m += ":" + format_double(v.real()) + ":" + format_double(v.imag());
            }
        add(m);
    }
    return out;
}

double parse_double(const std::string& tok, std::size_t line) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw DataError("line " + std::to_string(line) + ": bad float '" + tok + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

StateParams parse_params(const std::string& text, std::size_t line) {
    StateParams p;
    if (text == "-") return p;
    for (const std::string& kv : split(text, ',')) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw DataError("line " + std::to_string(line) + ": bad params entry '" + kv + "'");
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        if (key == "family") {
            p.family = val;
        } else if (key == "n") {
            p.n = std::atoi(val.c_str());
        } else if (key == "p") {
            p.p = parse_double(val, line);
        } else if (key == "theta") {
            p.theta = parse_double(val, line);
        } else if (key == "truth") {
            p.truth = std::atoi(val.c_str());
        } else if (key == "rho") {
            std::vector<std::string> toks = split(val, ':');
            std::size_t x = toks[0].find('x');
            if (x == std::string::npos)
                throw DataError("line " + std::to_string(line) + ": bad rho shape");
            std::size_t rows = std::strtoull(toks[0].c_str(), nullptr, 10);
            std::size_t cols = std::strtoull(toks[0].c_str() + x + 1, nullptr, 10);
            if (toks.size() != 1 + 2 * rows * cols)
                throw DataError("line " + std::to_string(line) + ": truncated rho entries");
            ComplexMatrix m(rows, cols);
            std::size_t t = 1;
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) {
                    double re = parse_double(toks[t++], line);
                    double im = parse_double(toks[t++], line);
                    m(i, j) = cxd(re, im);
                }
            p.rho = std::move(m);
        } else {
            throw DataError("line " + std::to_string(line) + ": unknown params key '" + key + "'");
        }
    }
    return p;
}

}  // namespace

std::string dataset_to_string(const Dataset& ds) {
    ds.check_consistent();
    std::string out = "dataset-v1 feature_dim=" + std::to_string(ds.feature_dim) +
                      " classes=" + std::to_string(ds.class_count) + " family=" + ds.meta.family +
                      " seed=" + std::to_string(ds.meta.seed) + "\n";
    for (const Sample& s : ds.samples) {
        out += "features=";
        for (std::size_t i = 0; i < s.features.size(); ++i) {
            if (i) out += ',';
            out += format_double(s.features[i]);
        }
        out += "; label=";
        out += s.label ? std::to_string(*s.label) : "-";
        out += "; source=" + source_tag(s);
        out += "; params=" + params_string(s.params);
        out += "\n";
    }
    return out;
}

Dataset dataset_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("line 1: empty dataset file");

    Dataset ds;
    {
        std::vector<std::string> toks = split(line, ' ');
        if (toks.size() != 5 || toks[0] != "dataset-v1")
            throw DataError("line 1: bad dataset header");
        auto value = [&](std::size_t i, const char* key) -> std::string {
            std::string prefix = std::string(key) + "=";
            if (toks[i].rfind(prefix, 0) != 0)
                throw DataError("line 1: expected " + prefix + "... in header");
            return toks[i].substr(prefix.size());
        };
        ds.feature_dim = std::strtoull(value(1, "feature_dim").c_str(), nullptr, 10);
        ds.class_count = std::atoi(value(2, "classes").c_str());
        ds.meta.family = value(3, "family");
        ds.meta.seed = std::strtoull(value(4, "seed").c_str(), nullptr, 10);
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) throw DataError("line " + std::to_string(lineno) + ": empty sample line");
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            std::size_t pos = line.find("; ", start);
            if (pos == std::string::npos) {
                parts.push_back(line.substr(start));
                break;
            }
            parts.push_back(line.substr(start, pos - start));
            start = pos + 2;
        }
        if (parts.size() != 4)
            throw DataError("line " + std::to_string(lineno) + ": expected 4 fields, got " +
                            std::to_string(parts.size()));
        auto strip = [&](std::size_t i, const char* key) -> std::string {
            std::string prefix = std::string(key) + "=";
            if (parts[i].rfind(prefix, 0) != 0)
                throw DataError("line " + std::to_string(lineno) + ": expected field " + prefix);
            return parts[i].substr(prefix.size());
        };

        Sample s;
        std::string feats = strip(0, "features");
        if (!feats.empty())
            for (const std::string& tok : split(feats, ','))
                s.features.push_back(parse_double(tok, lineno));
        if (s.features.size() != ds.feature_dim)
            throw DataError("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(ds.feature_dim) + " features, got " +
                            std::to_string(s.features.size()));
        std::string lab = strip(1, "label");
        if (lab != "-") {
            int idx = std::atoi(lab.c_str());
            if (idx < 0 || idx >= ds.class_count)
                throw DataError("line " + std::to_string(lineno) + ": label out of range");
            s.label = idx;
        }
        parse_source(strip(2, "source"), s, lineno);
        s.params = parse_params(strip(3, "params"), lineno);
        ds.samples.push_back(std::move(s));
    }
    ds.check_consistent();
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::string text = dataset_to_string(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_string(buf.str());
}

}  // namespace entangle
