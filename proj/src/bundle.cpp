#include "funscreen/bundle.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "funscreen/csv.hpp"
#include "funscreen/error.hpp"

namespace fs = std::filesystem;

namespace funscreen {

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

const char* reducer_name(ReducerKind r) {
    switch (r) {
        case ReducerKind::pca: return "pca";
        case ReducerKind::rml: return "rml";
        case ReducerKind::none: return "none";
    }
    return "pca";
}

const char* regressor_name(RegressorKind r) {
    return r == RegressorKind::ppr ? "ppr" : "knn";
}

const char* kind_name(ScalarRegressor::Kind k) {
    return k == ScalarRegressor::Kind::ppr ? "ppr" : "knn";
}

class ManifestWriter {
public:
    void put(const std::string& key, const std::string& value) {
        lines_.push_back(key + " = " + value);
    }
    void put_num(const std::string& key, double v) { put(key, format_double(v)); }
    void put_num(const std::string& key, std::uint64_t v) { put(key, std::to_string(v)); }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path);
        out << "# funscreen model bundle\n";
        for (const auto& l : lines_) out << l << "\n";
        out.flush();
        if (!out.good()) throw IoError("cannot write " + path);
    }

private:
    std::vector<std::string> lines_;
};

class ManifestReader {
public:
    explicit ManifestReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos)
                throw FormatError("bad line in " + path + ": " + line);
            map_.emplace(line.substr(0, eq), line.substr(eq + 3));
        }
    }

    const std::string& get(const std::string& key) const {
        const auto it = map_.find(key);
        if (it == map_.end())
            throw FormatError("model manifest missing key " + key);
        return it->second;
    }

    std::size_t get_size(const std::string& key) const {
        const std::string& s = get(key);
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (end != s.c_str() + s.size() || s.empty())
            throw FormatError("bad integer for " + key + ": " + s);
        return static_cast<std::size_t>(v);
    }

    std::uint64_t get_u64(const std::string& key) const {
        return static_cast<std::uint64_t>(get_size(key));
    }

    double get_double(const std::string& key) const {
        return parse_token(get(key), key);
    }

    std::vector<double> get_doubles(const std::string& key) const {
        const std::string& s = get(key);
        std::vector<double> out;
        if (s.empty()) return out;
        std::size_t at = 0;
        while (true) {
            const auto comma = s.find(',', at);
            out.push_back(parse_token(s.substr(at, comma - at), key));
            if (comma == std::string::npos) break;
            at = comma + 1;
        }
        return out;
    }

    std::vector<int> get_ints(const std::string& key) const {
        const auto d = get_doubles(key);
        std::vector<int> out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = static_cast<int>(d[i]);
        return out;
    }

private:
    double parse_token(const std::string& token, const std::string& key) const {
        if (token == "NA") return std::numeric_limits<double>::quiet_NaN();
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (token.empty() || end != token.c_str() + token.size())
            throw FormatError("bad number for " + key + ": '" + token + "'");
        return v;
    }

    std::string path_;
    std::map<std::string, std::string> map_;
};

ReducerKind parse_reducer(const std::string& s) {
    if (s == "pca") return ReducerKind::pca;
    if (s == "rml") return ReducerKind::rml;
    if (s == "none") return ReducerKind::none;
    throw FormatError("unknown reducer '" + s + "'");
}

RegressorKind parse_regressor(const std::string& s) {
    if (s == "ppr") return RegressorKind::ppr;
    if (s == "knn") return RegressorKind::knn;
    throw FormatError("unknown regressor '" + s + "'");
}

ScalarRegressor::Kind parse_kind(const std::string& s) {
    if (s == "ppr") return ScalarRegressor::Kind::ppr;
    if (s == "knn") return ScalarRegressor::Kind::knn;
    throw FormatError("unknown regressor kind '" + s + "'");
}

// Matrices are stored as a shape key plus, when nonempty, a headerless CSV.
void save_matrix(ManifestWriter& w, const std::string& dir, const std::string& name,
                 const Matrix& m) {
    w.put("matrix." + name,
          std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
    if (m.rows() > 0 && m.cols() > 0)
        write_csv((fs::path(dir) / (name + ".csv")).string(), m);
}

Matrix load_matrix(const ManifestReader& r, const std::string& dir, const std::string& name) {
    const std::string& shape = r.get("matrix." + name);
    const auto x = shape.find(" x ");
    if (x == std::string::npos)
        throw FormatError("bad shape for matrix." + name + ": " + shape);
    const std::size_t rows = std::strtoull(shape.c_str(), nullptr, 10);
    const std::size_t cols = std::strtoull(shape.c_str() + x + 3, nullptr, 10);
    if (rows == 0 || cols == 0) return Matrix(rows, cols);
    const Matrix m = read_csv((fs::path(dir) / (name + ".csv")).string(), false).values;
    if (m.rows() != rows || m.cols() != cols)
        throw FormatError("matrix " + name + " is " + std::to_string(m.rows()) + " x " +
                          std::to_string(m.cols()) + ", manifest says " + shape);
    return m;
}

}  // namespace

void save_metamodel(const FunctionalMetamodel& model, const std::string& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec || !fs::is_directory(directory))
        throw IoError("cannot create model directory " + directory);

    ManifestWriter w;
    w.put("format", "funscreen-model");
    w.put_num("version", std::size_t{1});
    w.put_num("p", model.p);
    w.put_num("t", model.t);
    w.put_num("classifier_k", model.classifier_k);

    w.put_num("config.clusters", model.config.clusters);
    w.put("config.reducer", reducer_name(model.config.reducer));
    w.put_num("config.dims", model.config.dims);
    w.put("config.regressor", regressor_name(model.config.regressor));
    w.put_num("config.k", model.config.k);
    w.put_num("config.x_percent", model.config.x_percent);
    w.put_num("config.max_terms", model.config.max_terms);
    w.put_num("config.seed", model.config.seed);

    w.put("input_min", join_doubles(model.input_min));
    w.put("input_range", join_doubles(model.input_range));
    w.put("labels", join_ints(model.labels));
    w.put("merge_heights", join_doubles(model.merge_heights));
    save_matrix(w, directory, "inputs", model.inputs);

    w.put_num("warnings.count", model.warnings.size());
    for (std::size_t i = 0; i < model.warnings.size(); ++i)
        w.put("warning." + std::to_string(i), model.warnings[i]);

    w.put_num("clusters.count", model.clusters.size());
    for (std::size_t c = 0; c < model.clusters.size(); ++c) {
        const ClusterModel& cm = model.clusters[c];
        const std::string base = "cluster." + std::to_string(c) + ".";
        const std::string mat = "cluster" + std::to_string(c) + "_";
        w.put(base + "reducer", reducer_name(cm.reducer));
        w.put_num(base + "t0", cm.t0);
        w.put_num(base + "k", cm.k);
        w.put_num(base + "pca.total_inertia", cm.pca.total_inertia);
        w.put(base + "pca.eigenvalues", join_doubles(cm.pca.eigenvalues));
        w.put(base + "pca.column_means", join_doubles(cm.pca.column_means));
        save_matrix(w, directory, mat + "components", cm.pca.components);
        save_matrix(w, directory, mat + "scores", cm.pca.scores);
        save_matrix(w, directory, mat + "curves", cm.curves);
        save_matrix(w, directory, mat + "coords", cm.coords);
        save_matrix(w, directory, mat + "inputs", cm.inputs);

        w.put_num(base + "regressors.count", cm.regressors.size());
        for (std::size_t j = 0; j < cm.regressors.size(); ++j) {
            const ScalarRegressor& reg = cm.regressors[j];
            const std::string rb = base + "reg." + std::to_string(j) + ".";
            w.put(rb + "kind", kind_name(reg.kind));
            w.put_num(rb + "intercept", reg.intercept);
            w.put(rb + "rss", join_doubles(reg.rss));
            w.put_num(rb + "knn_k", reg.knn_k);
            save_matrix(w, directory, mat + "reg" + std::to_string(j) + "_knn_x",
                        reg.knn_inputs);
            save_matrix(w, directory, mat + "reg" + std::to_string(j) + "_knn_z",
                        reg.knn_targets);
            w.put_num(rb + "terms.count", reg.terms.size());
            for (std::size_t i = 0; i < reg.terms.size(); ++i) {
                const RidgeTerm& term = reg.terms[i];
                const std::string tb = rb + "term." + std::to_string(i) + ".";
                w.put(tb + "direction", join_doubles(term.direction));
                w.put(tb + "knots", join_doubles(term.knots));
                w.put(tb + "values", join_doubles(term.values));
                w.put_num(tb + "bandwidth", term.bandwidth);
                w.put_num(tb + "weight", term.weight);
            }
        }
    }

    w.write((fs::path(directory) / "model.txt").string());
}

FunctionalMetamodel load_metamodel(const std::string& directory) {
    const ManifestReader r((fs::path(directory) / "model.txt").string());
    if (r.get("format") != "funscreen-model")
        throw FormatError(directory + " is not a funscreen model bundle");
    if (r.get("version") != "1")
        throw FormatError("unsupported model version " + r.get("version"));

    FunctionalMetamodel model;
    model.p = r.get_size("p");
    model.t = r.get_size("t");
    model.classifier_k = r.get_size("classifier_k");

    model.config.clusters = r.get_size("config.clusters");
    model.config.reducer = parse_reducer(r.get("config.reducer"));
    model.config.dims = r.get_size("config.dims");
    model.config.regressor = parse_regressor(r.get("config.regressor"));
    model.config.k = r.get_size("config.k");
    model.config.x_percent = r.get_double("config.x_percent");
    model.config.max_terms = r.get_size("config.max_terms");
    model.config.seed = r.get_u64("config.seed");

    model.input_min = r.get_doubles("input_min");
    model.input_range = r.get_doubles("input_range");
    model.labels = r.get_ints("labels");
    model.merge_heights = r.get_doubles("merge_heights");
    model.inputs = load_matrix(r, directory, "inputs");

    const std::size_t n_warn = r.get_size("warnings.count");
    for (std::size_t i = 0; i < n_warn; ++i)
        model.warnings.push_back(r.get("warning." + std::to_string(i)));

    model.clusters.resize(r.get_size("clusters.count"));
    for (std::size_t c = 0; c < model.clusters.size(); ++c) {
        ClusterModel& cm = model.clusters[c];
        const std::string base = "cluster." + std::to_string(c) + ".";
        const std::string mat = "cluster" + std::to_string(c) + "_";
        cm.reducer = parse_reducer(r.get(base + "reducer"));
        cm.t0 = r.get_size(base + "t0");
        cm.k = r.get_size(base + "k");
        cm.pca.total_inertia = r.get_double(base + "pca.total_inertia");
        cm.pca.eigenvalues = r.get_doubles(base + "pca.eigenvalues");
        cm.pca.column_means = r.get_doubles(base + "pca.column_means");
        cm.pca.components = load_matrix(r, directory, mat + "components");
        cm.pca.scores = load_matrix(r, directory, mat + "scores");
        cm.curves = load_matrix(r, directory, mat + "curves");
        cm.coords = load_matrix(r, directory, mat + "coords");
        cm.inputs = load_matrix(r, directory, mat + "inputs");

        cm.regressors.resize(r.get_size(base + "regressors.count"));
        for (std::size_t j = 0; j < cm.regressors.size(); ++j) {
            ScalarRegressor& reg = cm.regressors[j];
            const std::string rb = base + "reg." + std::to_string(j) + ".";
            reg.kind = parse_kind(r.get(rb + "kind"));
            reg.intercept = r.get_double(rb + "intercept");
            reg.rss = r.get_doubles(rb + "rss");
            reg.knn_k = r.get_size(rb + "knn_k");
            reg.knn_inputs = load_matrix(r, directory, mat + "reg" + std::to_string(j) + "_knn_x");
            reg.knn_targets = load_matrix(r, directory, mat + "reg" + std::to_string(j) + "_knn_z");
            reg.terms.resize(r.get_size(rb + "terms.count"));
            for (std::size_t i = 0; i < reg.terms.size(); ++i) {
                RidgeTerm& term = reg.terms[i];
                const std::string tb = rb + "term." + std::to_string(i) + ".";
                term.direction = r.get_doubles(tb + "direction");
                term.knots = r.get_doubles(tb + "knots");
                term.values = r.get_doubles(tb + "values");
                term.bandwidth = r.get_double(tb + "bandwidth");
                term.weight = r.get_double(tb + "weight");
            }
        }
    }
    return model;
}

}  // namespace funscreen
