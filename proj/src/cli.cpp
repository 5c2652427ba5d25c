#include "funscreen/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "funscreen/artifact_io.hpp"
#include "funscreen/bundle.hpp"
#include "funscreen/csv.hpp"
#include "funscreen/design.hpp"
#include "funscreen/doe.hpp"
#include "funscreen/ensemble.hpp"
#include "funscreen/error.hpp"
#include "funscreen/gsi.hpp"
#include "funscreen/metamodel.hpp"
#include "funscreen/pca.hpp"
#include "funscreen/svg.hpp"
#include "funscreen/threads.hpp"
#include "funscreen/validation.hpp"

namespace funscreen {

namespace {

// Everything a subcommand can consume; one instance per subcommand so config
// overlays stay independent.
struct Values {
    std::string out, config;
    std::uint64_t seed = 0;
    // doe
    std::size_t p = 0;
    std::size_t resolution = 4;
    std::string design_kind = "factorial";
    std::size_t n = 0;
    std::size_t iterations = 20000;
    // screen
    std::string design_path, curves_path;
    double x_percent = 99.0;
    std::size_t max_order = 1;
    // fit / predict / validate
    std::string inputs_path, model_dir;
    std::string clusters = "1";
    std::string reducer = "pca";
    std::size_t dims = 0;
    std::string regressor = "ppr";
    std::size_t k = 0;
    std::size_t max_terms = 6;
    std::size_t folds = 10;
};

// Config-file keys recognized anywhere; keys a subcommand does not use are
// ignored so one file can drive a whole pipeline.
const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "p",      "resolution", "design",    "n",    "iterations", "x_percent",
        "max_order", "clusters", "reducer",  "dims", "regressor",  "k",
        "max_terms", "folds",    "seed"};
    return keys;
}

// One overridable option: the CLI11 handle tells whether the flag was given,
// the setter injects a config-file value otherwise.
struct Overridable {
    CLI::Option* option = nullptr;
    std::function<void(const std::string&)> set;
};
using OptionMap = std::map<std::string, Overridable>;

std::size_t parse_count(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size())
        throw ConfigError("bad value for " + key + ": '" + s + "'");
    return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw ConfigError("bad value for " + key + ": '" + s + "'");
    return v;
}

void bind_count(OptionMap& m, const std::string& key, CLI::Option* opt, std::size_t& slot) {
    m[key] = {opt, [key, &slot](const std::string& s) { slot = parse_count(key, s); }};
}

void bind_seed(OptionMap& m, CLI::Option* opt, std::uint64_t& slot) {
    m["seed"] = {opt, [&slot](const std::string& s) {
                     slot = static_cast<std::uint64_t>(parse_count("seed", s));
                 }};
}

void bind_real(OptionMap& m, const std::string& key, CLI::Option* opt, double& slot) {
    m[key] = {opt, [key, &slot](const std::string& s) { slot = parse_real(key, s); }};
}

void bind_text(OptionMap& m, const std::string& key, CLI::Option* opt, std::string& slot) {
    m[key] = {opt, [&slot](const std::string& s) { slot = s; }};
}

// Flat `key = value` file, '#' comments. Command-line flags win; unknown
// keys are an error naming all of them.
void overlay_config(const std::string& path, const OptionMap& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path);

    std::vector<std::string> unknown;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + " of " + path +
                              " is not 'key = value'");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        trim(key);
        trim(value);
        if (!known_config_keys().count(key)) {
            unknown.push_back(key);
            continue;
        }
        const auto it = options.find(key);
        if (it == options.end()) continue;  // valid key, not used by this subcommand
        if (it->second.option->count() > 0) continue;  // flag overrides file
        it->second.set(value);
    }
    if (!unknown.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < unknown.size(); ++i)
            joined += (i ? ", " : "") + unknown[i];
        throw ConfigError("unknown config keys: " + joined);
    }
}

ReducerKind reducer_from(const std::string& s) {
    if (s == "pca") return ReducerKind::pca;
    if (s == "rml") return ReducerKind::rml;
    if (s == "none") return ReducerKind::none;
    throw ConfigError("reducer must be pca, rml or none, got '" + s + "'");
}

RegressorKind regressor_from(const std::string& s) {
    if (s == "ppr") return RegressorKind::ppr;
    if (s == "knn") return RegressorKind::knn;
    throw ConfigError("regressor must be ppr or knn, got '" + s + "'");
}

std::size_t clusters_from(const std::string& s) {
    if (s == "auto") return 0;
    return parse_count("clusters", s);
}

MetamodelConfig metamodel_config(const Values& v) {
    MetamodelConfig cfg;
    cfg.clusters = clusters_from(v.clusters);
    cfg.reducer = reducer_from(v.reducer);
    cfg.dims = v.dims;
    cfg.regressor = regressor_from(v.regressor);
    cfg.k = v.k;
    cfg.x_percent = v.x_percent;
    cfg.max_terms = v.max_terms;
    cfg.seed = v.seed;
    return cfg;
}

Matrix load_table(const std::string& path) {
    return read_csv(path, csv_sniff_header(path)).values;
}

void emit_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Shared run wrapper: prior-manifest verification, metadata records, body,
// manifest write; on any failure the run's outputs are removed and a single
// diagnostic line is printed.
int execute(const std::string& out_dir,
            const std::vector<std::pair<std::string, std::string>>& records,
            const std::function<void(ArtifactSet&)>& body) {
    std::optional<ArtifactSet> art;
    try {
        art.emplace(out_dir);
        const auto prior = ArtifactSet::verify_manifest(out_dir);
        if (prior.found && prior.problems.empty() && prior.checked > 0)
            std::cout << "manifest: verified " << prior.checked
                      << " artifacts from the previous run\n";
        for (const auto& p : prior.problems) std::cerr << "manifest: " << p << "\n";

        for (const auto& [key, value] : records) art->record(key, value);
        body(*art);
        art->write_manifest();
        return 0;
    } catch (const Error& e) {
        if (art) art->cleanup();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        if (art) art->cleanup();
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}

int cmd_doe(const Values& v) {
    std::vector<std::pair<std::string, std::string>> records = {
        {"command", "doe"},
        {"design", v.design_kind},
        {"p", std::to_string(v.p)},
        {"seed", std::to_string(v.seed)}};
    if (v.design_kind == "factorial")
        records.push_back({"resolution", std::to_string(v.resolution)});
    else
        records.insert(records.end(), {{"n", std::to_string(v.n)},
                                       {"iterations", std::to_string(v.iterations)}});

    return execute(v.out, records, [&](ArtifactSet& art) {
        DesignMatrix design(Matrix(1, 1), Coding::unit_cube);
        if (v.design_kind == "factorial") {
            const auto ff =
                generate_fractional_factorial(static_cast<int>(v.p),
                                              static_cast<int>(v.resolution), v.seed);
            design = ff.design;
            art.record("achieved_resolution", ff.aliases.resolution_label());
        } else if (v.design_kind == "lhs") {
            if (v.n == 0) throw ConfigError("lhs designs need --n");
            const auto lhs = optimize_lhs(static_cast<int>(v.n), static_cast<int>(v.p),
                                          static_cast<int>(v.iterations), v.seed);
            design = lhs.design;
            art.record("initial_discrepancy", format_double(lhs.initial_discrepancy));
            art.record("final_discrepancy", format_double(lhs.final_discrepancy));
        } else {
            throw ConfigError("design must be factorial or lhs, got '" + v.design_kind + "'");
        }
        art.add("design.csv");
        write_csv(art.path("design.csv"), design.values(), design.factor_names());
        std::cout << "wrote design.csv (" << design.runs() << " runs x " << design.factors()
                  << " factors)\n";
    });
}

int cmd_screen(const Values& v) {
    const std::vector<std::pair<std::string, std::string>> records = {
        {"command", "screen"},      {"design", v.design_path},
        {"curves", v.curves_path},  {"x_percent", format_double(v.x_percent)},
        {"max_order", std::to_string(v.max_order)}, {"seed", std::to_string(v.seed)}};

    return execute(v.out, records, [&](ArtifactSet& art) {
        const DesignMatrix design =
            load_design_matrix(v.design_path, csv_sniff_header(v.design_path));
        const CurveEnsemble curves(load_table(v.curves_path));
        const int p = static_cast<int>(design.factors());
        const EffectSet effects = v.max_order <= 1
                                      ? EffectSet::main_effects(p)
                                      : EffectSet::up_to_order(p, static_cast<int>(v.max_order));
        const GsiReport report = compute_gsi(design, curves.values, effects, v.x_percent);
        emit_warnings(report.warnings);

        const std::size_t n_effects = report.effects.size();
        const std::size_t t_len = curves.length();

        art.add("gsi.csv");
        Matrix gsi_tab(n_effects, 2);
        for (std::size_t e = 0; e < n_effects; ++e) {
            gsi_tab(e, 0) = static_cast<double>(e + 1);
            gsi_tab(e, 1) = report.gsi[e];
        }
        write_csv(art.path("gsi.csv"), gsi_tab, {"effect", "gsi"});

        std::size_t max_len = 1;
        for (const auto& eff : report.effects) max_len = std::max(max_len, eff.size());
        art.add("effects.csv");
        Matrix eff_tab(n_effects, 1 + max_len, std::numeric_limits<double>::quiet_NaN());
        std::vector<std::string> eff_head = {"effect"};
        for (std::size_t j = 0; j < max_len; ++j)
            eff_head.push_back("factor" + std::to_string(j + 1));
        for (std::size_t e = 0; e < n_effects; ++e) {
            eff_tab(e, 0) = static_cast<double>(e + 1);
            for (std::size_t j = 0; j < report.effects[e].size(); ++j)
                eff_tab(e, 1 + j) = static_cast<double>(report.effects[e][j] + 1);
        }
        write_csv(art.path("effects.csv"), eff_tab, eff_head);

        art.add("si.csv");
        Matrix si_tab(n_effects, 1 + report.t0);
        std::vector<std::string> si_head = {"effect"};
        for (std::size_t c = 0; c < report.t0; ++c) si_head.push_back("pc" + std::to_string(c + 1));
        for (std::size_t e = 0; e < n_effects; ++e) {
            si_tab(e, 0) = static_cast<double>(e + 1);
            for (std::size_t c = 0; c < report.t0; ++c) si_tab(e, 1 + c) = report.si(e, c);
        }
        write_csv(art.path("si.csv"), si_tab, si_head);

        art.add("r2.csv");
        Matrix r2_tab(t_len, 2);
        for (std::size_t t = 0; t < t_len; ++t) {
            r2_tab(t, 0) = static_cast<double>(t + 1);
            r2_tab(t, 1) = report.r2_curve[t];
        }
        write_csv(art.path("r2.csv"), r2_tab, {"t", "r2"});

        // Spectrum and PC-output correlations come from the decomposition
        // itself rather than the truncated screening report.
        const PcaResult pca = pca_decompose(center_and_inertia(curves.values));
        art.add("eigen_spectrum.csv");
        Matrix spec_tab(pca.rank(), 3);
        for (std::size_t kk = 0; kk < pca.rank(); ++kk) {
            spec_tab(kk, 0) = static_cast<double>(kk + 1);
            spec_tab(kk, 1) = pca.eigenvalues[kk];
            spec_tab(kk, 2) = pca.total_inertia > 0.0 ? pca.eigenvalues[kk] / pca.total_inertia
                                                      : 0.0;
        }
        write_csv(art.path("eigen_spectrum.csv"), spec_tab, {"k", "eigenvalue", "share"});

        const std::size_t k_max = std::min<std::size_t>(3, pca.rank());
        const Matrix corr = pc_correlations(pca, curves.values, k_max);
        art.add("pc_correlations.csv");
        Matrix corr_tab(t_len, 1 + k_max);
        std::vector<std::string> corr_head = {"t"};
        for (std::size_t kk = 0; kk < k_max; ++kk)
            corr_head.push_back("pc" + std::to_string(kk + 1));
        for (std::size_t t = 0; t < t_len; ++t) {
            corr_tab(t, 0) = static_cast<double>(t + 1);
            for (std::size_t kk = 0; kk < k_max; ++kk) corr_tab(t, 1 + kk) = corr(kk, t);
        }
        write_csv(art.path("pc_correlations.csv"), corr_tab, corr_head);

        SvgSeries r2_series;
        r2_series.label = "R2";
        r2_series.x.resize(t_len);
        r2_series.y = report.r2_curve;
        for (std::size_t t = 0; t < t_len; ++t) r2_series.x[t] = static_cast<double>(t + 1);
        if (write_svg_chart(art.path("r2.svg"), "Dynamic fit quality", "time index", "R2",
                            {r2_series}))
            art.add("r2.svg");
        else
            std::cerr << "warning: could not write r2.svg\n";

        std::size_t top = 0;
        for (std::size_t e = 1; e < n_effects; ++e)
            if (report.gsi[e] > report.gsi[top]) top = e;
        std::cout << "screened " << n_effects << " effects over " << report.t0
                  << " components; top effect " << EffectSet::label(report.effects[top])
                  << " (gsi = " << format_double(report.gsi[top]) << ")\n";
    });
}

std::vector<std::pair<std::string, std::string>> model_records(const Values& v,
                                                               const char* command) {
    return {{"command", command},
            {"inputs", v.inputs_path},
            {"curves", v.curves_path},
            {"clusters", v.clusters},
            {"reducer", v.reducer},
            {"dims", std::to_string(v.dims)},
            {"regressor", v.regressor},
            {"k", std::to_string(v.k)},
            {"x_percent", format_double(v.x_percent)},
            {"max_terms", std::to_string(v.max_terms)},
            {"seed", std::to_string(v.seed)}};
}

int cmd_fit(const Values& v) {
    return execute(v.out, model_records(v, "fit"), [&](ArtifactSet& art) {
        const Matrix x = load_table(v.inputs_path);
        const Matrix y = load_table(v.curves_path);
        const FunctionalMetamodel model = fit_functional_metamodel(x, y, metamodel_config(v));
        emit_warnings(model.warnings);

        art.add("model");
        save_metamodel(model, art.path("model"));

        art.add("labels.csv");
        Matrix label_tab(model.labels.size(), 2);
        for (std::size_t i = 0; i < model.labels.size(); ++i) {
            label_tab(i, 0) = static_cast<double>(i + 1);
            label_tab(i, 1) = static_cast<double>(model.labels[i]);
        }
        write_csv(art.path("labels.csv"), label_tab, {"run", "label"});

        art.add("dendrogram.csv");
        Matrix dendro_tab(model.merge_heights.size(), 2);
        for (std::size_t i = 0; i < model.merge_heights.size(); ++i) {
            dendro_tab(i, 0) = static_cast<double>(i + 1);
            dendro_tab(i, 1) = model.merge_heights[i];
        }
        write_csv(art.path("dendrogram.csv"), dendro_tab, {"merge", "height"});

        std::cout << "fitted " << model.inputs.rows() << " curves in " << model.clusters.size()
                  << " cluster(s); model bundle in " << art.path("model") << "\n";
    });
}

int cmd_predict(const Values& v) {
    const std::vector<std::pair<std::string, std::string>> records = {
        {"command", "predict"}, {"model", v.model_dir}, {"inputs", v.inputs_path}};

    return execute(v.out, records, [&](ArtifactSet& art) {
        const FunctionalMetamodel model = load_metamodel(v.model_dir);
        const Matrix x = load_table(v.inputs_path);
        Matrix preds(x.rows(), model.t);
        parallel_for(x.rows(), [&](std::size_t i) {
            const auto row = predict_functional(model, x.row_copy(i));
            std::copy(row.begin(), row.end(), preds.row(i));
        });
        art.add("predictions.csv");
        write_csv(art.path("predictions.csv"), preds);
        std::cout << "predicted " << preds.rows() << " curves of length " << preds.cols() << "\n";
    });
}

int cmd_validate(const Values& v) {
    auto records = model_records(v, "validate");
    records.push_back({"folds", std::to_string(v.folds)});

    return execute(v.out, records, [&](ArtifactSet& art) {
        const Matrix x = load_table(v.inputs_path);
        const Matrix y = load_table(v.curves_path);
        const MetamodelConfig cfg = metamodel_config(v);
        const ValidationReport report = cross_validate(x, y, cfg, v.folds, v.seed);
        const std::size_t t_len = y.cols();

        art.add("scores.csv");
        Matrix score_tab(t_len, 3);
        for (std::size_t t = 0; t < t_len; ++t) {
            score_tab(t, 0) = static_cast<double>(t + 1);
            score_tab(t, 1) = report.mse_curve[t];
            score_tab(t, 2) = report.q2_curve[t];
        }
        write_csv(art.path("scores.csv"), score_tab, {"t", "mse", "q2"});

        art.add("predictions.csv");
        write_csv(art.path("predictions.csv"), report.predictions);

        art.add("folds.csv");
        Matrix fold_tab(x.rows(), 2);
        for (std::size_t f = 0; f < report.folds.size(); ++f)
            for (const std::size_t i : report.folds[f]) {
                fold_tab(i, 0) = static_cast<double>(i + 1);
                fold_tab(i, 1) = static_cast<double>(f);
            }
        write_csv(art.path("folds.csv"), fold_tab, {"run", "fold"});

        // Reference overlay in the usual three flavours; a failing variant
        // only loses its line, never the run.
        const struct {
            const char* label;
            const char* dash;
            ReducerKind reducer;
            RegressorKind regressor;
        } variants[] = {{"pca", "", ReducerKind::pca, RegressorKind::ppr},
                        {"rml", "8,4", ReducerKind::rml, RegressorKind::ppr},
                        {"fknn", "2,3", ReducerKind::none, RegressorKind::knn}};
        std::vector<SvgSeries> series;
        for (const auto& variant : variants) {
            MetamodelConfig vc = cfg;
            vc.reducer = variant.reducer;
            vc.regressor = variant.regressor;
            try {
                const auto rep = cross_validate(x, y, vc, v.folds, v.seed);
                SvgSeries s;
                s.label = variant.label;
                s.dash = variant.dash;
                s.x.resize(t_len);
                for (std::size_t t = 0; t < t_len; ++t) s.x[t] = static_cast<double>(t + 1);
                s.y = rep.q2_curve;
                series.push_back(std::move(s));
            } catch (const Error& e) {
                std::cerr << "warning: " << variant.label << " overlay skipped: " << e.what()
                          << "\n";
            }
        }
        if (write_svg_chart(art.path("q2_compare.svg"), "Predictivity by pipeline", "time index",
                            "Q2", series))
            art.add("q2_compare.svg");
        else
            std::cerr << "warning: could not write q2_compare.svg\n";

        double q2_min = std::numeric_limits<double>::infinity();
        std::size_t defined = 0;
        for (const double q : report.q2_curve)
            if (std::isfinite(q)) {
                q2_min = std::min(q2_min, q);
                ++defined;
            }
        std::cout << "validated with " << v.folds << " folds; q2 defined at " << defined << "/"
                  << t_len << " points";
        if (defined > 0) std::cout << ", minimum " << format_double(q2_min);
        std::cout << "\n";
    });
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Screening and functional metamodeling for curve-output experiments"};
    app.require_subcommand(1);

    Values doe_v, screen_v, fit_v, predict_v, validate_v;
    OptionMap doe_m, screen_m, fit_m, predict_m, validate_m;

    const auto add_common = [](CLI::App* cmd, Values& v, OptionMap& m) {
        cmd->add_option("--out", v.out, "output directory")->required();
        cmd->add_option("--config", v.config, "flat key = value config file");
        bind_seed(m, cmd->add_option("--seed", v.seed, "deterministic run seed"), v.seed);
    };
    const auto add_model_options = [](CLI::App* cmd, Values& v, OptionMap& m) {
        cmd->add_option("--inputs", v.inputs_path, "inputs CSV (one run per row)")->required();
        cmd->add_option("--curves", v.curves_path, "curves CSV (one run per row)")->required();
        bind_text(m, "clusters",
                  cmd->add_option("--clusters", v.clusters, "cluster count or 'auto'"),
                  v.clusters);
        bind_text(m, "reducer", cmd->add_option("--reducer", v.reducer, "pca, rml or none"),
                  v.reducer);
        bind_count(m, "dims", cmd->add_option("--dims", v.dims, "reduced dimension (0 = auto)"),
                   v.dims);
        bind_text(m, "regressor", cmd->add_option("--regressor", v.regressor, "ppr or knn"),
                  v.regressor);
        bind_count(m, "k", cmd->add_option("--k", v.k, "neighbour count (0 = cross-validated)"),
                   v.k);
        bind_real(m, "x_percent",
                  cmd->add_option("--x-percent", v.x_percent, "inertia percentage retained"),
                  v.x_percent);
        bind_count(m, "max_terms",
                   cmd->add_option("--max-terms", v.max_terms, "projection pursuit budget"),
                   v.max_terms);
    };

    CLI::App* doe_cmd = app.add_subcommand("doe", "generate a design");
    add_common(doe_cmd, doe_v, doe_m);
    doe_cmd->add_option("--p", doe_v.p, "factor count")->required();
    bind_count(doe_m, "resolution",
               doe_cmd->add_option("--resolution", doe_v.resolution, "target resolution (3 or 4)"),
               doe_v.resolution);
    bind_text(doe_m, "design",
              doe_cmd->add_option("--design", doe_v.design_kind, "factorial or lhs"),
              doe_v.design_kind);
    bind_count(doe_m, "n", doe_cmd->add_option("--n", doe_v.n, "run count (lhs only)"), doe_v.n);
    bind_count(doe_m, "iterations",
               doe_cmd->add_option("--iterations", doe_v.iterations,
                                   "annealing iterations (lhs only)"),
               doe_v.iterations);

    CLI::App* screen_cmd = app.add_subcommand("screen", "generalized sensitivity indices");
    add_common(screen_cmd, screen_v, screen_m);
    screen_cmd->add_option("--design", screen_v.design_path, "design CSV")->required();
    screen_cmd->add_option("--curves", screen_v.curves_path, "curves CSV")->required();
    bind_real(screen_m, "x_percent",
              screen_cmd->add_option("--x-percent", screen_v.x_percent,
                                     "inertia percentage retained"),
              screen_v.x_percent);
    bind_count(screen_m, "max_order",
               screen_cmd->add_option("--max-order", screen_v.max_order,
                                      "highest interaction order"),
               screen_v.max_order);

    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a functional metamodel");
    add_common(fit_cmd, fit_v, fit_m);
    add_model_options(fit_cmd, fit_v, fit_m);

    CLI::App* predict_cmd = app.add_subcommand("predict", "predict curves from a fitted model");
    add_common(predict_cmd, predict_v, predict_m);
    predict_cmd->add_option("--model", predict_v.model_dir, "model bundle directory")->required();
    predict_cmd->add_option("--inputs", predict_v.inputs_path, "inputs CSV")->required();

    CLI::App* validate_cmd = app.add_subcommand("validate", "cross-validate a configuration");
    add_common(validate_cmd, validate_v, validate_m);
    add_model_options(validate_cmd, validate_v, validate_m);
    bind_count(validate_m, "folds",
               validate_cmd->add_option("--folds", validate_v.folds, "fold count"),
               validate_v.folds);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(doe_cmd)) {
            if (!doe_v.config.empty()) overlay_config(doe_v.config, doe_m);
            return cmd_doe(doe_v);
        }
        if (app.got_subcommand(screen_cmd)) {
            if (!screen_v.config.empty()) overlay_config(screen_v.config, screen_m);
            return cmd_screen(screen_v);
        }
        if (app.got_subcommand(fit_cmd)) {
            if (!fit_v.config.empty()) overlay_config(fit_v.config, fit_m);
            return cmd_fit(fit_v);
        }
        if (app.got_subcommand(predict_cmd)) {
            if (!predict_v.config.empty()) overlay_config(predict_v.config, predict_m);
            return cmd_predict(predict_v);
        }
        if (!validate_v.config.empty()) overlay_config(validate_v.config, validate_m);
        return cmd_validate(validate_v);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace funscreen
