#include "stsurv/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stsurv/config.hpp"
#include "stsurv/data_io.hpp"
#include "stsurv/diagnostics.hpp"
#include "stsurv/error.hpp"
#include "stsurv/report.hpp"
#include "stsurv/rt_engine.hpp"
#include "stsurv/sampler.hpp"
#include "stsurv/simulator.hpp"
#include "stsurv/spatial.hpp"
#include "stsurv/spline_basis.hpp"
#include "stsurv/surveillance.hpp"

namespace stsurv {

namespace fs = std::filesystem;

namespace {

struct FitArgs {
    std::string counts;
    std::string population;
    std::string adjacency;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> chains;
    std::optional<int> window_days;
    std::string reference_day;
    int tau = 7;
    bool allow_islands = false;
    bool keep_eps = false;
    std::string draws_format = "csv";
    bool quiet = false;
};

struct RtArgs {
    std::string out;
    int tau = 7;
    bool include_dow = false;
    bool include_eps = false;
};

struct RiskArgs {
    std::string out;
    std::string reference_day;
    std::vector<double> rate_cuts = RiskCuts{}.rate_cuts;
    std::vector<double> rt_cuts = RiskCuts{}.rt_cuts;
    bool per_draw = false;
};

struct SimulateArgs {
    std::string mode = "model";
    std::string out;
    int rows = 5;
    int cols = 4;
    std::optional<int> days;
    int knot_spacing = 14;
    std::uint64_t seed = 1;
    double area_population = 1e5;
    double log_rate = std::log(20.0 / 1e5);
    double rho = 0.5;
    std::vector<double> sigma_beta = {1.0};
    double sigma_eps = 0.5;
    std::string r_schedule;
    double imports = 10.0;
    std::string start_date = "2020-03-06";
    double si_mean = 4.7;
    double si_sd = 2.9;
    int max_lag = 25;
};

struct BasisArgs {
    std::string out;
    std::optional<int> days;
    std::string counts;
    int knot_spacing = 14;
};

// Accepts a date inside the dataset or a 1-based day number; returns 0-based.
int resolve_day(const std::string& text, const SurveillanceDataset& dataset) {
    if (text.empty()) {
        return dataset.num_days() - 1;
    }
    if (const auto date = parse_date(text)) {
        for (int j = 0; j < dataset.num_days(); ++j) {
            if (dataset.dates[static_cast<std::size_t>(j)] == *date) {
                return j;
            }
        }
        throw ValidationError("reference day " + text + " is outside the data period");
    }
    std::size_t used = 0;
    int day = 0;
    try {
        day = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || day < 1 || day > dataset.num_days()) {
        throw ValidationError("reference day must be a date or a day number in 1.." +
                              std::to_string(dataset.num_days()));
    }
    return day - 1;
}

void declare_files(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    RunManifest manifest = fs::exists(dir / "manifest.json") ? RunManifest::load(dir) : RunManifest();
    for (const auto& [name, description] : files) {
        manifest.add_file(name, description);
    }
    manifest.add_file("manifest.json", "run manifest");
    manifest.save(dir);
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string());
    }
}

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig config = a.config.empty() ? RunConfig{} : load_config(a.config);
    if (a.seed) {
        config.seed = *a.seed;
    }
    if (a.chains) {
        config.chains = *a.chains;
    }
    config.validate();

    int missing = 0;
    SurveillanceDataset dataset =
        assemble_dataset(load_counts(a.counts), load_populations(a.population), &missing);
    if (missing > 0 && !a.quiet) {
        err << "note: " << missing << " missing (area, date) cells filled with 0\n";
    }
    if (a.window_days) {
        dataset = last_days(dataset, *a.window_days);
    }
    const AdjacencyGraph graph = load_adjacency(a.adjacency, dataset.area_ids, a.allow_islands);
    const SplineBasis basis = build_basis(dataset.num_days(), config.knot_spacing_days);
    const LerouxField field(graph);

    SamplerSettings settings;
    settings.keep_eps = a.keep_eps;
    settings.progress = !a.quiet;
    settings.log = &err;
    const PosteriorDraws draws = fit(dataset, field, basis, config, settings);

    EmitOptions options;
    options.reference_day = resolve_day(a.reference_day, dataset);
    options.tau = a.tau;
    options.draw_format = a.draws_format == "binary" ? DrawFormat::binary : DrawFormat::csv;
    options.rt.include_eps = false;
    const RunManifest manifest = emit_results(draws, dataset, basis, config, a.out, options);

    out << "fit: " << dataset.num_areas() << " areas, " << dataset.num_days() << " days, K="
        << basis.num_functions << ", " << draws.size() << " retained draws\n";
    out << "wrote " << manifest.files().size() << " files to " << a.out << '\n';
    return 0;
}

int run_rt(const RtArgs& a, std::ostream& out) {
    const RunContext run = load_run(a.out);
    RtOptions options;
    options.include_dow = a.include_dow;
    options.include_eps = a.include_eps;
    const auto profile = build_infectivity(run.config.si_mean, run.config.si_sd, run.config.max_lag);
    const RtSurface surface = smoothed_rt(run.draws, run.basis, profile, options);
    write_rt_tables(surface, run.dataset, a.out);
    write_cori_table(run.dataset, profile, a.tau, fs::path(a.out) / "rt_cori.csv");
    declare_files(a.out, {{"rt_areas.csv", "smoothed R_t per area and day"},
                          {"rt_region.csv", "population-weighted regional R_t"},
                          {"rt_cori.csv", "windowed R_t on region-wide counts, tau=" +
                                              std::to_string(a.tau)}});
    const auto region = regional_rt(surface, run.dataset.populations);
    const auto& last = region.back();
    out << "rt: regional R_t on " << format_date(run.dataset.dates.back()) << " = "
        << format_number(last.mean) << " [" << format_number(last.lo95) << ", "
        << format_number(last.hi95) << "], P(R>1) = " << format_number(last.p_gt_1) << '\n';
    return 0;
}

int run_risk(const RiskArgs& a, std::ostream& out) {
    const RunContext run = load_run(a.out);
    RiskCuts cuts;
    cuts.rate_cuts = a.rate_cuts;
    cuts.rt_cuts = a.rt_cuts;
    cuts.validate();
    const int day = resolve_day(a.reference_day, run.dataset);
    const auto profile = build_infectivity(run.config.si_mean, run.config.si_sd, run.config.max_lag);
    const RtSurface surface = smoothed_rt(run.draws, run.basis, profile, {});
    const auto rows = risk_table(run.draws, run.basis, surface, day, cuts);
    write_risk_table(rows, run.dataset, fs::path(a.out) / "risk.csv");
    write_correlation_table(pattern_correlation(run.draws, run.basis, a.per_draw),
                            fs::path(a.out) / "correlation.csv");
    declare_files(a.out, {{"risk.csv", "risk levels at day " + std::to_string(day + 1)},
                          {"correlation.csv", "correlation of beta_star columns across areas"}});
    int top = 0;
    for (const auto& r : rows) {
        top = std::max(top, r.level.combined_level);
    }
    out << "risk: " << rows.size() << " areas on "
        << format_date(run.dataset.dates[static_cast<std::size_t>(day)])
        << ", highest combined level " << top << '\n';
    return 0;
}

int run_diagnose(const std::string& dir, std::ostream& out) {
    const RunContext run = load_run(dir);
    const auto rows = diagnostics(run.draws);
    write_summary_table(rows, fs::path(dir) / "diagnostics.csv");
    declare_files(dir, {{"diagnostics.csv", "split R-hat and n_eff recomputed from the draws"}});
    double worst_rhat = 1.0;
    double min_neff = std::numeric_limits<double>::infinity();
    std::string worst;
    for (const auto& r : rows) {
        if (r.rhat && *r.rhat > worst_rhat) {
            worst_rhat = *r.rhat;
            worst = r.name;
        }
        min_neff = std::min(min_neff, r.n_eff);
    }
    out << "diagnose: " << rows.size() << " parameters, max R-hat " << format_number(worst_rhat)
        << (worst.empty() ? "" : " (" + worst + ")") << ", min n_eff " << format_number(min_neff)
        << '\n';
    return 0;
}

std::vector<double> parse_schedule(const std::string& text, std::optional<int> days) {
    std::vector<double> schedule;
    if (text.empty()) {
        schedule.assign(static_cast<std::size_t>(days.value_or(100)), 1.0);
        return schedule;
    }
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        const auto colon = piece.find(':');
        double value = 0.0;
        int length = 0;
        try {
            value = std::stod(piece.substr(0, colon));
            length = colon == std::string::npos ? 0 : std::stoi(piece.substr(colon + 1));
        } catch (const std::exception&) {
            length = 0;
        }
        if (!(value > 0.0) || length < 1) {
            throw ValidationError("bad r-schedule segment '" + piece + "' (expected R:days)");
        }
        schedule.insert(schedule.end(), static_cast<std::size_t>(length), value);
    }
    if (days && *days != static_cast<int>(schedule.size())) {
        throw ValidationError("r-schedule covers " + std::to_string(schedule.size()) +
                              " days but --days is " + std::to_string(*days));
    }
    return schedule;
}

void write_truth(const ModelState& truth, const fs::path& path) {
    nlohmann::json doc;
    doc["gamma"] = std::vector<double>(truth.gamma.data(), truth.gamma.data() + truth.gamma.size());
    doc["mu"] = std::vector<double>(truth.mu.data(), truth.mu.data() + truth.mu.size());
    doc["rho"] = std::vector<double>(truth.rho.data(), truth.rho.data() + truth.rho.size());
    doc["sigma_beta"] = std::vector<double>(truth.sigma_beta.data(),
                                            truth.sigma_beta.data() + truth.sigma_beta.size());
    doc["sigma_eps"] = truth.sigma_eps;
    nlohmann::json beta = nlohmann::json::array();
    for (Eigen::Index i = 0; i < truth.beta_star.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(truth.beta_star.cols()));
        for (Eigen::Index k = 0; k < truth.beta_star.cols(); ++k) {
            row[static_cast<std::size_t>(k)] = truth.beta_star(i, k);
        }
        beta.push_back(row);
    }
    doc["beta_star"] = beta;
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << doc.dump(2) << '\n';
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    if (a.rows < 1 || a.cols < 1) {
        throw ValidationError("--rows and --cols must be positive");
    }
    if (!(a.area_population > 0.0)) {
        throw ValidationError("--area-population must be positive");
    }
    const auto start = parse_date(a.start_date);
    if (!start) {
        throw ValidationError("bad --start-date " + a.start_date);
    }
    const int I = a.rows * a.cols;
    const AdjacencyGraph graph = make_lattice(a.rows, a.cols);
    const auto ids = default_area_ids(I);
    const std::vector<double> populations(static_cast<std::size_t>(I), a.area_population);
    make_dir(a.out);
    const fs::path dir(a.out);

    std::vector<std::pair<std::string, std::string>> files = {
        {"counts.csv", "simulated counts: area_id,date,count"},
        {"population.csv", "area_id,population"},
        {"adjacency.csv", "rook adjacency of the lattice: area_a,area_b"}};

    SurveillanceDataset dataset;
    if (a.mode == "model") {
        SimulationSpec spec;
        spec.graph = graph;
        spec.populations = populations;
        spec.num_days = a.days.value_or(56);
        spec.knot_spacing = a.knot_spacing;
        spec.seed = a.seed;
        spec.start_date = *start;
        spec.rho = a.rho;
        spec.sigma_eps = a.sigma_eps;
        const int K = build_basis(spec.num_days, spec.knot_spacing).num_functions;
        spec.mu = Eigen::VectorXd::Constant(K, a.log_rate);
        if (a.sigma_beta.size() == 1) {
            spec.sigma_beta = Eigen::VectorXd::Constant(K, a.sigma_beta.front());
        } else if (static_cast<int>(a.sigma_beta.size()) == K) {
            spec.sigma_beta = Eigen::Map<const Eigen::VectorXd>(a.sigma_beta.data(), K);
        } else {
            throw ValidationError("--sigma-beta needs 1 or " + std::to_string(K) + " values");
        }
        const ModelSimulation sim = simulate_from_model(spec);
        dataset = sim.dataset;
        write_truth(sim.truth, dir / "truth.json");
        files.emplace_back("truth.json", "latent parameters used for the simulation");
    } else if (a.mode == "renewal") {
        RenewalSpec spec;
        spec.num_areas = I;
        spec.populations = populations;
        spec.r_schedule = parse_schedule(a.r_schedule, a.days);
        spec.num_days = static_cast<int>(spec.r_schedule.size());
        spec.profile = build_infectivity(a.si_mean, a.si_sd, a.max_lag);
        spec.seed = a.seed;
        spec.daily_imports = a.imports;
        spec.start_date = *start;
        const RenewalSimulation sim = simulate_renewal(spec);
        dataset = sim.dataset;
        int extinct = 0;
        for (bool e : sim.extinct) {
            extinct += e ? 1 : 0;
        }
        if (extinct > 0) {
            out << "simulate: " << extinct << " of " << I << " areas went extinct\n";
        }
    } else {
        throw ValidationError("--mode must be model or renewal");
    }
    write_dataset(dataset, dir);
    write_adjacency(graph, ids, dir / "adjacency.csv");
    declare_files(dir, files);
    out << "simulate: " << I << " areas, " << dataset.num_days() << " days, "
        << dataset.counts.sum() << " cases written to " << a.out << '\n';
    return 0;
}

int run_basis_dump(const BasisArgs& a, std::ostream& out) {
    int J = 0;
    if (a.days) {
        J = *a.days;
    } else if (!a.counts.empty()) {
        J = static_cast<int>(load_counts(a.counts).dates.size());
    } else {
        throw ValidationError("basis-dump needs --days or --counts");
    }
    const SplineBasis basis = build_basis(J, a.knot_spacing);
    make_dir(a.out);
    std::ofstream f(fs::path(a.out) / "basis.csv");
    if (!f) {
        throw std::runtime_error("cannot write basis.csv");
    }
    f << "day";
    for (int k = 0; k < basis.num_functions; ++k) {
        f << ",X" << k + 1;
    }
    f << '\n';
    for (int j = 0; j < J; ++j) {
        f << j + 1;
        for (int k = 0; k < basis.num_functions; ++k) {
            f << ',' << format_number(basis.design(k, j));
        }
        f << '\n';
    }
    declare_files(a.out, {{"basis.csv", "spline design matrix, one row per day"}});
    out << "basis-dump: J=" << J << ", K=" << basis.num_functions << '\n';
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatio-temporal small-area surveillance: model fitting, R_t and risk levels",
                 "stsurv"};
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "fit the model and write all result tables");
    fit_cmd->add_option("--counts", fa.counts, "long-format counts (area_id,date,count)")
        ->required()
        ->check(CLI::ExistingFile);
    fit_cmd->add_option("--population", fa.population, "area_id,population")
        ->required()
        ->check(CLI::ExistingFile);
    fit_cmd->add_option("--adjacency", fa.adjacency, "edge list (area_a,area_b)")
        ->required()
        ->check(CLI::ExistingFile);
    fit_cmd->add_option("--config", fa.config, "JSON run configuration")->check(CLI::ExistingFile);
    fit_cmd->add_option("--out", fa.out, "run directory")->required();
    fit_cmd->add_option("--seed", fa.seed, "overrides the configured seed");
    fit_cmd->add_option("--chains", fa.chains, "overrides the configured number of chains");
    fit_cmd->add_option("--window-days", fa.window_days, "fit only the last N days");
    fit_cmd->add_option("--reference-day", fa.reference_day, "risk date (YYYY-MM-DD or day number)");
    fit_cmd->add_option("--tau", fa.tau, "window of the windowed R_t baseline");
    fit_cmd->add_flag("--allow-islands", fa.allow_islands, "accept areas without neighbours");
    fit_cmd->add_flag("--keep-eps", fa.keep_eps, "retain eps in the draws");
    fit_cmd->add_option("--draws-format", fa.draws_format, "csv or binary")
        ->check(CLI::IsMember({"csv", "binary"}));
    fit_cmd->add_flag("--quiet", fa.quiet, "no progress output");

    RtArgs ra;
    auto* rt_cmd = app.add_subcommand("rt", "smoothed and windowed R_t from saved draws");
    rt_cmd->add_option("--out", ra.out, "run directory of a completed fit")->required();
    rt_cmd->add_option("--tau", ra.tau, "window of the windowed R_t baseline");
    rt_cmd->add_flag("--include-dow", ra.include_dow, "add the day-of-week term to the predictor");
    rt_cmd->add_flag("--include-eps", ra.include_eps, "add eps (requires --keep-eps at fit time)");

    RiskArgs ka;
    auto* risk_cmd = app.add_subcommand("risk", "risk table and correlation matrix");
    risk_cmd->add_option("--out", ka.out, "run directory of a completed fit")->required();
    risk_cmd->add_option("--reference-day", ka.reference_day, "YYYY-MM-DD or day number");
    risk_cmd->add_option("--rate-cuts", ka.rate_cuts, "weekly rate cut points per 100,000")
        ->delimiter(',');
    risk_cmd->add_option("--rt-cuts", ka.rt_cuts, "R_t cut points")->delimiter(',');
    risk_cmd->add_flag("--per-draw-correlation", ka.per_draw, "average per-draw correlations");

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "write a synthetic dataset");
    sim_cmd->add_option("--mode", sa.mode, "model or renewal")
        ->check(CLI::IsMember({"model", "renewal"}));
    sim_cmd->add_option("--out", sa.out, "output directory")->required();
    sim_cmd->add_option("--rows", sa.rows, "lattice rows");
    sim_cmd->add_option("--cols", sa.cols, "lattice columns");
    sim_cmd->add_option("--days", sa.days, "number of days");
    sim_cmd->add_option("--knot-spacing", sa.knot_spacing, "days between knots (model mode)");
    sim_cmd->add_option("--seed", sa.seed, "random seed");
    sim_cmd->add_option("--area-population", sa.area_population, "population of every area");
    sim_cmd->add_option("--log-rate", sa.log_rate, "mu for every spline function (model mode)");
    sim_cmd->add_option("--rho", sa.rho, "Leroux mixing parameter (model mode)");
    sim_cmd->add_option("--sigma-beta", sa.sigma_beta, "one value or one per function")
        ->delimiter(',');
    sim_cmd->add_option("--sigma-eps", sa.sigma_eps, "overdispersion sd (model mode)");
    sim_cmd->add_option("--r-schedule", sa.r_schedule, "R:days segments, e.g. 1.4:60,0.8:40");
    sim_cmd->add_option("--imports", sa.imports, "daily imported cases over the first S days");
    sim_cmd->add_option("--start-date", sa.start_date, "first date");
    sim_cmd->add_option("--si-mean", sa.si_mean, "serial interval mean (renewal mode)");
    sim_cmd->add_option("--si-sd", sa.si_sd, "serial interval sd (renewal mode)");
    sim_cmd->add_option("--max-lag", sa.max_lag, "infectivity truncation S (renewal mode)");

    std::string diagnose_dir;
    auto* diag_cmd = app.add_subcommand("diagnose", "recompute R-hat and n_eff from saved draws");
    diag_cmd->add_option("--out", diagnose_dir, "run directory of a completed fit")->required();

    BasisArgs ba;
    auto* basis_cmd = app.add_subcommand("basis-dump", "write the spline design matrix");
    basis_cmd->add_option("--out", ba.out, "output directory")->required();
    basis_cmd->add_option("--days", ba.days, "number of days");
    basis_cmd->add_option("--counts", ba.counts, "take the number of days from a counts file")
        ->check(CLI::ExistingFile);
    basis_cmd->add_option("--knot-spacing", ba.knot_spacing, "days between knots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 1;
    }

    try {
        if (*fit_cmd) {
            return run_fit(fa, out, err);
        }
        if (*rt_cmd) {
            return run_rt(ra, out);
        }
        if (*risk_cmd) {
            return run_risk(ka, out);
        }
        if (*sim_cmd) {
            return run_simulate(sa, out);
        }
        if (*diag_cmd) {
            return run_diagnose(diagnose_dir, out);
        }
        if (*basis_cmd) {
            return run_basis_dump(ba, out);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace stsurv
