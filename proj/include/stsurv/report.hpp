#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stsurv/config.hpp"
#include "stsurv/data_io.hpp"
#include "stsurv/diagnostics.hpp"
#include "stsurv/rt_engine.hpp"
#include "stsurv/sampler.hpp"
#include "stsurv/spline_basis.hpp"
#include "stsurv/surveillance.hpp"

namespace stsurv {

/// Number formatting shared by every table: %.10g, NaN as NA.
std::string format_number(double value);

/// manifest.json of a run directory: configuration, seed, dataset metadata,
/// draw layout and the list of every file written into the directory.
class RunManifest {
public:
    RunManifest() = default;
    explicit RunManifest(nlohmann::json doc) : doc_(std::move(doc)) {}

    static RunManifest load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    void add_file(const std::string& name, const std::string& description);
    [[nodiscard]] std::vector<std::string> files() const;
    [[nodiscard]] nlohmann::json& doc() noexcept { return doc_; }
    [[nodiscard]] const nlohmann::json& doc() const noexcept { return doc_; }

private:
    nlohmann::json doc_ = nlohmann::json::object();
};

enum class DrawFormat { csv, binary };

/// Long format: chain,iteration,parameter,value with %.17g values. Every
/// parameter of the state is written (eps only when retained), so reading
/// back reproduces the draws exactly.
void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path);
/// Raw little-endian records: int32 chain, int32 iteration, then doubles in
/// the order gamma, mu, rho, sigma_beta, sigma_eps, beta_star (row-major),
/// eps (row-major, when retained).
void write_draws_binary(const PosteriorDraws& draws, const std::filesystem::path& path);

nlohmann::json draws_layout(const PosteriorDraws& draws);
PosteriorDraws read_draws(const std::filesystem::path& path, const nlohmann::json& layout,
                          DrawFormat format);

void write_summary_table(const std::vector<ParameterSummary>& rows,
                         const std::filesystem::path& path);

/// fitted_region.csv and fitted_areas.csv: fitted counts with and without the
/// day-of-week term.
void write_fitted_tables(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                         const SplineBasis& basis, const std::filesystem::path& dir);

/// rates.csv: smoothed daily rate per 100,000 for every (area, day).
void write_rate_table(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                      const SplineBasis& basis, const std::filesystem::path& path);

/// rt_areas.csv and rt_region.csv.
void write_rt_tables(const RtSurface& surface, const SurveillanceDataset& dataset,
                     const std::filesystem::path& dir);

/// rt_cori.csv: windowed baseline on region-wide counts.
void write_cori_table(const SurveillanceDataset& dataset, const InfectivityProfile& profile,
                      int tau, const std::filesystem::path& path);

void write_risk_table(const std::vector<RiskRow>& rows, const SurveillanceDataset& dataset,
                      const std::filesystem::path& path);

void write_correlation_table(const PatternCorrelation& corr, const std::filesystem::path& path);

struct EmitOptions {
    /// 0-based; defaults to the last day.
    std::optional<int> reference_day;
    RiskCuts cuts;
    DrawFormat draw_format = DrawFormat::csv;
    RtOptions rt;
    /// Window of the rt_cori.csv baseline.
    int tau = 7;
};

/// Writes the full result set of a completed fit into out_dir: input
/// snapshot, draws, parameter summary, fitted curves, rates, R_t tables,
/// windowed baseline, risk table, correlation matrix and manifest.json. Throws ValidationError
/// ("no retained draws") when draws is empty.
RunManifest emit_results(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                         const SplineBasis& basis, const RunConfig& config,
                         const std::filesystem::path& out_dir, const EmitOptions& options = {});

/// Manifest skeleton for a fit: config, seed, dataset metadata, draw layout.
RunManifest fit_manifest(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                         const SplineBasis& basis, const RunConfig& config,
                         DrawFormat draw_format);

/// Everything the post-fit commands need, reloaded from a run directory.
struct RunContext {
    RunManifest manifest;
    RunConfig config;
    SurveillanceDataset dataset;
    SplineBasis basis;
    PosteriorDraws draws;
};

/// Throws ValidationError("no draws found in ...") when the directory holds
/// no completed fit.
RunContext load_run(const std::filesystem::path& dir);

} // namespace stsurv
