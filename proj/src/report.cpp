#include "stsurv/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "stsurv/error.hpp"
#include "stsurv/fitted.hpp"

namespace stsurv {

namespace fs = std::filesystem;

namespace {

std::ofstream open_table(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::string exact_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

// Every scalar of a state in the canonical order used by both dump formats.
template <typename Visit>
void visit_state(ModelState& s, bool with_eps, Visit&& visit) {
    for (Eigen::Index d = 0; d < s.gamma.size(); ++d) {
        visit("gamma[" + std::to_string(d + 1) + "]", s.gamma[d]);
    }
    for (Eigen::Index k = 0; k < s.mu.size(); ++k) {
        visit("mu[" + std::to_string(k + 1) + "]", s.mu[k]);
    }
    for (Eigen::Index k = 0; k < s.rho.size(); ++k) {
        visit("rho[" + std::to_string(k + 1) + "]", s.rho[k]);
    }
    for (Eigen::Index k = 0; k < s.sigma_beta.size(); ++k) {
        visit("sigma_beta[" + std::to_string(k + 1) + "]", s.sigma_beta[k]);
    }
    visit(std::string("sigma_eps"), s.sigma_eps);
    for (Eigen::Index i = 0; i < s.beta_star.rows(); ++i) {
        for (Eigen::Index k = 0; k < s.beta_star.cols(); ++k) {
            visit("beta_star[" + std::to_string(i + 1) + ":" + std::to_string(k + 1) + "]",
                  s.beta_star(i, k));
        }
    }
    if (with_eps) {
        for (Eigen::Index i = 0; i < s.eps.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.eps.cols(); ++j) {
                visit("eps[" + std::to_string(i + 1) + ":" + std::to_string(j + 1) + "]",
                      s.eps(i, j));
            }
        }
    }
}

struct Layout {
    int num_areas = 0;
    int num_functions = 0;
    int num_days = 0;
    int rho_size = 1;
    bool has_eps = false;
    int chains = 0;
    int iterations = 0;
    int burn_in = 0;
    int thin = 1;
    std::size_t num_draws = 0;
    ModelOptions options;
};

Layout parse_layout(const nlohmann::json& j) {
    Layout l;
    l.num_areas = j.at("num_areas").get<int>();
    l.num_functions = j.at("num_functions").get<int>();
    l.num_days = j.at("num_days").get<int>();
    l.rho_size = j.at("rho_size").get<int>();
    l.has_eps = j.at("has_eps").get<bool>();
    l.chains = j.at("chains").get<int>();
    l.iterations = j.at("iterations").get<int>();
    l.burn_in = j.at("burn_in").get<int>();
    l.thin = j.at("thin").get<int>();
    l.num_draws = j.at("num_draws").get<std::size_t>();
    l.options = config_from_json(j.at("model")).model;
    return l;
}

ModelState blank_state(const Layout& l) {
    ModelState s = make_state(l.num_areas, l.num_functions, l.has_eps ? l.num_days : 0,
                              l.rho_size == 1 ? RhoMode::common : RhoMode::per_basis);
    if (!l.has_eps) {
        s.eps.resize(0, 0);
    }
    return s;
}

PosteriorDraws empty_draws(const Layout& l) {
    PosteriorDraws d;
    d.num_chains = l.chains;
    d.iterations = l.iterations;
    d.burn_in = l.burn_in;
    d.thin = l.thin;
    d.has_eps = l.has_eps;
    d.options = l.options;
    return d;
}

void write_summary_rows(std::ofstream& out, const std::string& prefix, const Summary& s) {
    out << prefix << format_number(s.mean) << ',' << format_number(s.q025) << ','
        << format_number(s.q975) << '\n';
}

} // namespace

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "NA";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

RunManifest RunManifest::load(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        throw ValidationError("no draws found in " + dir.string() + " (manifest.json missing)");
    }
    try {
        return RunManifest(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("corrupt manifest in " + dir.string() + ": " + e.what());
    }
}

void RunManifest::save(const fs::path& dir) const {
    std::ofstream out(dir / "manifest.json");
    if (!out) {
        throw std::runtime_error("cannot write manifest in " + dir.string());
    }
    out << doc_.dump(2) << '\n';
}

void RunManifest::add_file(const std::string& name, const std::string& description) {
    auto& files = doc_["files"];
    if (!files.is_array()) {
        files = nlohmann::json::array();
    }
    for (auto& f : files) {
        if (f.at("name") == name) {
            f["description"] = description;
            return;
        }
    }
    files.push_back({{"name", name}, {"description", description}});
}

std::vector<std::string> RunManifest::files() const {
    std::vector<std::string> out;
    if (doc_.contains("files")) {
        for (const auto& f : doc_.at("files")) {
            out.push_back(f.at("name").get<std::string>());
        }
    }
    return out;
}

nlohmann::json draws_layout(const PosteriorDraws& draws) {
    if (draws.draws.empty()) {
        throw ValidationError("no retained draws");
    }
    const auto& s = draws.draws.front().state;
    RunConfig model_only;
    model_only.model = draws.options;
    return {
        {"num_areas", s.num_areas()},
        {"num_functions", s.num_functions()},
        {"num_days", draws.has_eps ? s.eps.cols() : 0},
        {"rho_size", s.rho.size()},
        {"has_eps", draws.has_eps},
        {"chains", draws.num_chains},
        {"iterations", draws.iterations},
        {"burn_in", draws.burn_in},
        {"thin", draws.thin},
        {"num_draws", draws.size()},
        {"model", config_to_json(model_only)},
    };
}

void write_draws_csv(const PosteriorDraws& draws, const fs::path& path) {
    auto out = open_table(path);
    out << "chain,iteration,parameter,value\n";
    for (const auto& d : draws.draws) {
        ModelState s = d.state;
        const std::string prefix = std::to_string(d.chain + 1) + "," + std::to_string(d.iteration) + ",";
        visit_state(s, draws.has_eps, [&](const std::string& name, double& v) {
            out << prefix << name << ',' << exact_number(v) << '\n';
        });
    }
}

void write_draws_binary(const PosteriorDraws& draws, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    for (const auto& d : draws.draws) {
        const std::int32_t header[2] = {d.chain, d.iteration};
        out.write(reinterpret_cast<const char*>(header), sizeof header);
        ModelState s = d.state;
        visit_state(s, draws.has_eps, [&](const std::string&, double& v) {
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        });
    }
}

PosteriorDraws read_draws(const fs::path& path, const nlohmann::json& layout_doc,
                          DrawFormat format) {
    Layout layout;
    try {
        layout = parse_layout(layout_doc);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad draw layout in manifest: ") + e.what());
    }
    PosteriorDraws draws = empty_draws(layout);

    if (format == DrawFormat::binary) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw ValidationError("no draws found: cannot open " + path.string());
        }
        for (std::size_t n = 0; n < layout.num_draws; ++n) {
            std::int32_t header[2];
            if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
                throw ValidationError("truncated draw file " + path.string());
            }
            Draw d{header[0], header[1], blank_state(layout)};
            visit_state(d.state, layout.has_eps, [&](const std::string&, double& v) {
                if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
                    throw ValidationError("truncated draw file " + path.string());
                }
            });
            draws.draws.push_back(std::move(d));
        }
        return draws;
    }

    const auto table = read_delimited(path);
    const auto c_chain = table.column("chain");
    const auto c_iter = table.column("iteration");
    const auto c_param = table.column("parameter");
    const auto c_value = table.column("value");
    std::size_t row = 0;
    for (std::size_t n = 0; n < layout.num_draws; ++n) {
        if (row >= table.rows.size()) {
            throw ValidationError("draw file " + path.string() + " has fewer draws than declared");
        }
        const int chain = std::stoi(table.rows[row][c_chain]) - 1;
        const int iteration = std::stoi(table.rows[row][c_iter]);
        Draw d{chain, iteration, blank_state(layout)};
        visit_state(d.state, layout.has_eps, [&](const std::string& name, double& v) {
            if (row >= table.rows.size() || table.rows[row][c_param] != name) {
                throw ValidationError("draw file " + path.string() + " line " +
                                      std::to_string(row < table.rows.size()
                                                         ? table.line_numbers[row]
                                                         : -1) +
                                      ": expected parameter " + name);
            }
            v = std::stod(table.rows[row][c_value]);
            ++row;
        });
        draws.draws.push_back(std::move(d));
    }
    return draws;
}

void write_summary_table(const std::vector<ParameterSummary>& rows, const fs::path& path) {
    auto out = open_table(path);
    out << "parameter,mean,sd,q2.5,q50,q97.5,rhat,n_eff\n";
    for (const auto& r : rows) {
        out << r.name << ',' << format_number(r.summary.mean) << ',' << format_number(r.summary.sd)
            << ',' << format_number(r.summary.q025) << ',' << format_number(r.summary.q50) << ','
            << format_number(r.summary.q975) << ','
            << (r.rhat ? format_number(*r.rhat) : std::string("NA")) << ','
            << format_number(r.n_eff) << '\n';
    }
}

void write_fitted_tables(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                         const SplineBasis& basis, const fs::path& dir) {
    const auto write_rows = [&](std::ofstream& out, const std::string& prefix,
                                std::optional<int> area) {
        const auto full = fitted_curves(draws, dataset, basis, area, {true, false});
        const auto trend = fitted_curves(draws, dataset, basis, area, {false, false});
        for (int j = 0; j < dataset.num_days(); ++j) {
            const auto u = static_cast<std::size_t>(j);
            out << prefix << format_date(dataset.dates[u]) << ',' << j + 1 << ','
                << format_number(full.mean[u]) << ',' << format_number(full.lo95[u]) << ','
                << format_number(full.hi95[u]) << ',' << format_number(trend.mean[u]) << ','
                << format_number(trend.lo95[u]) << ',' << format_number(trend.hi95[u]) << ','
                << (dataset.counts.size() > 0 ? std::to_string(area ? dataset.counts(*area, j)
                                                                    : dataset.counts.col(j).sum())
                                              : std::string("NA"))
                << '\n';
        }
    };
    const std::string columns =
        "date,day,mean,lo95,hi95,trend_mean,trend_lo95,trend_hi95,observed\n";
    auto region = open_table(dir / "fitted_region.csv");
    region << columns;
    write_rows(region, "", std::nullopt);
    auto areas = open_table(dir / "fitted_areas.csv");
    areas << "area_id," << columns;
    for (int i = 0; i < dataset.num_areas(); ++i) {
        write_rows(areas, dataset.area_ids[static_cast<std::size_t>(i)] + ",", i);
    }
}

void write_rate_table(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                      const SplineBasis& basis, const fs::path& path) {
    auto out = open_table(path);
    out << "area_id,date,day,mean,lo95,hi95\n";
    for (int i = 0; i < dataset.num_areas(); ++i) {
        for (int j = 0; j < dataset.num_days(); ++j) {
            const auto s = smoothed_rate(draws, basis, i, j);
            write_summary_rows(out,
                               dataset.area_ids[static_cast<std::size_t>(i)] + "," +
                                   format_date(dataset.dates[static_cast<std::size_t>(j)]) + "," +
                                   std::to_string(j + 1) + ",",
                               s);
        }
    }
}

void write_rt_tables(const RtSurface& surface, const SurveillanceDataset& dataset,
                     const fs::path& dir) {
    auto areas = open_table(dir / "rt_areas.csv");
    areas << "area_id,date,mean,lo95,hi95,p_gt_1\n";
    for (int i = 0; i < surface.num_areas(); ++i) {
        for (int t = 0; t < surface.num_reported(); ++t) {
            const auto& s = surface.summary(i, t);
            areas << dataset.area_ids[static_cast<std::size_t>(i)] << ','
                  << format_date(dataset.dates[static_cast<std::size_t>(surface.first_day() + t)])
                  << ',' << format_number(s.mean) << ',' << format_number(s.lo95) << ','
                  << format_number(s.hi95) << ',' << format_number(s.p_gt_1) << '\n';
        }
    }
    const auto region = regional_rt(surface, dataset.populations);
    auto out = open_table(dir / "rt_region.csv");
    out << "date,mean,lo95,hi95,p_gt_1\n";
    for (int t = 0; t < surface.num_reported(); ++t) {
        const auto& s = region[static_cast<std::size_t>(t)];
        out << format_date(dataset.dates[static_cast<std::size_t>(surface.first_day() + t)]) << ','
            << format_number(s.mean) << ',' << format_number(s.lo95) << ','
            << format_number(s.hi95) << ',' << format_number(s.p_gt_1) << '\n';
    }
}

void write_cori_table(const SurveillanceDataset& dataset, const InfectivityProfile& profile,
                      int tau, const fs::path& path) {
    std::vector<double> totals(static_cast<std::size_t>(dataset.num_days()));
    for (int j = 0; j < dataset.num_days(); ++j) {
        totals[static_cast<std::size_t>(j)] = dataset.counts.col(j).sum();
    }
    const auto r = cori_rt(totals, profile, tau);
    auto out = open_table(path);
    out << "date,cori_rt\n";
    for (int j = 0; j < dataset.num_days(); ++j) {
        const auto& v = r[static_cast<std::size_t>(j)];
        out << format_date(dataset.dates[static_cast<std::size_t>(j)]) << ','
            << (v ? format_number(*v) : std::string("NA")) << '\n';
    }
}

void write_risk_table(const std::vector<RiskRow>& rows, const SurveillanceDataset& dataset,
                      const fs::path& path) {
    auto out = open_table(path);
    out << "area_id,weekly_rate,rt,rate_level,rt_level,combined_level\n";
    for (const auto& r : rows) {
        out << dataset.area_ids[static_cast<std::size_t>(r.area)] << ','
            << format_number(r.weekly_rate) << ',' << format_number(r.rt) << ','
            << r.level.rate_level << ',' << r.level.rt_level << ',' << r.level.combined_level
            << '\n';
    }
}

void write_correlation_table(const PatternCorrelation& corr, const fs::path& path) {
    auto out = open_table(path);
    out << "peak_day";
    for (int d : corr.peak_days) {
        out << ',' << d;
    }
    out << '\n';
    for (Eigen::Index a = 0; a < corr.matrix.rows(); ++a) {
        out << corr.peak_days[static_cast<std::size_t>(a)];
        for (Eigen::Index b = 0; b < corr.matrix.cols(); ++b) {
            out << ',' << format_number(corr.matrix(a, b));
        }
        out << '\n';
    }
}

RunManifest fit_manifest(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                         const SplineBasis& basis, const RunConfig& config,
                         DrawFormat draw_format) {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["seed"] = config.seed;
    doc["config"] = config_to_json(config);
    doc["dataset"] = {
        {"area_ids", dataset.area_ids},
        {"populations", dataset.populations},
        {"start_date", format_date(dataset.dates.front())},
        {"num_days", dataset.num_days()},
    };
    doc["basis"] = {{"num_functions", basis.num_functions},
                    {"knot_spacing_days", config.knot_spacing_days},
                    {"interior_knots", basis.interior_knots}};
    doc["draws"] = draws_layout(draws);
    doc["draws"]["format"] = draw_format == DrawFormat::csv ? "csv" : "binary";
    doc["draws"]["file"] = draw_format == DrawFormat::csv ? "draws.csv" : "draws.bin";
    doc["acceptance"] = draws.acceptance;
    doc["files"] = nlohmann::json::array();
    return RunManifest(std::move(doc));
}

RunManifest emit_results(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                         const SplineBasis& basis, const RunConfig& config,
                         const fs::path& out_dir, const EmitOptions& options) {
    if (draws.draws.empty()) {
        throw ValidationError("no retained draws");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw std::runtime_error("cannot create output directory " + out_dir.string());
    }

    RunManifest manifest = fit_manifest(draws, dataset, basis, config, options.draw_format);
    write_dataset(dataset, out_dir);
    manifest.add_file("counts.csv", "input snapshot: area_id,date,count");
    manifest.add_file("population.csv", "input snapshot: area_id,population");
    if (options.draw_format == DrawFormat::csv) {
        write_draws_csv(draws, out_dir / "draws.csv");
        manifest.add_file("draws.csv", "retained draws: chain,iteration,parameter,value");
    } else {
        write_draws_binary(draws, out_dir / "draws.bin");
        manifest.add_file("draws.bin", "retained draws, binary records");
    }
    write_summary_table(diagnostics(draws), out_dir / "summary.csv");
    manifest.add_file("summary.csv", "posterior summary, split R-hat and n_eff per parameter");
    write_fitted_tables(draws, dataset, basis, out_dir);
    manifest.add_file("fitted_region.csv", "fitted region-wide daily counts");
    manifest.add_file("fitted_areas.csv", "fitted daily counts per area");
    write_rate_table(draws, dataset, basis, out_dir / "rates.csv");
    manifest.add_file("rates.csv", "smoothed daily rate per 100,000 per area and day");

    const auto profile = build_infectivity(config.si_mean, config.si_sd, config.max_lag);
    const auto surface = smoothed_rt(draws, basis, profile, options.rt);
    write_rt_tables(surface, dataset, out_dir);
    manifest.add_file("rt_areas.csv", "smoothed R_t per area and day");
    manifest.add_file("rt_region.csv", "population-weighted regional R_t");
    write_cori_table(dataset, profile, options.tau, out_dir / "rt_cori.csv");
    manifest.add_file("rt_cori.csv", "windowed R_t on region-wide counts, tau=" +
                                         std::to_string(options.tau));

    const int reference = options.reference_day.value_or(dataset.num_days() - 1);
    write_risk_table(risk_table(draws, basis, surface, reference, options.cuts), dataset,
                     out_dir / "risk.csv");
    manifest.add_file("risk.csv", "risk levels at day " + std::to_string(reference + 1));
    write_correlation_table(pattern_correlation(draws, basis), out_dir / "correlation.csv");
    manifest.add_file("correlation.csv", "correlation of beta_star columns across areas");
    manifest.add_file("manifest.json", "run manifest");
    manifest.save(out_dir);
    return manifest;
}

RunContext load_run(const fs::path& dir) {
    RunContext ctx;
    ctx.manifest = RunManifest::load(dir);
    const auto& doc = ctx.manifest.doc();
    if (!doc.contains("draws") || !doc.contains("config") || !doc.contains("dataset")) {
        throw ValidationError("no draws found in " + dir.string());
    }
    try {
        ctx.config = config_from_json(doc.at("config"));
        const auto format = doc.at("draws").at("format").get<std::string>() == "binary"
                                ? DrawFormat::binary
                                : DrawFormat::csv;
        const auto file = dir / doc.at("draws").at("file").get<std::string>();
        if (!fs::exists(file)) {
            throw ValidationError("no draws found in " + dir.string());
        }
        ctx.draws = read_draws(file, doc.at("draws"), format);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("corrupt manifest in " + dir.string() + ": " + e.what());
    }
    int missing = 0;
    ctx.dataset = assemble_dataset(load_counts(dir / "counts.csv"),
                                   load_populations(dir / "population.csv"), &missing);
    ctx.basis = build_basis(ctx.dataset.num_days(), ctx.config.knot_spacing_days);
    return ctx;
}

} // namespace stsurv
