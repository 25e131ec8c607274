#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stsurv/spatial.hpp"

namespace stsurv {

using Date = std::chrono::sys_days;

/// Strict ISO-8601 calendar date (YYYY-MM-DD).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

/// Daily counts for I areas over J consecutive days.
struct SurveillanceDataset {
    std::vector<std::string> area_ids; // lexicographic
    std::vector<Date> dates;           // consecutive, ascending
    Eigen::MatrixXi counts;            // I x J
    std::vector<double> populations;   // persons, length I

    [[nodiscard]] int num_areas() const noexcept { return static_cast<int>(area_ids.size()); }
    [[nodiscard]] int num_days() const noexcept { return static_cast<int>(dates.size()); }
    [[nodiscard]] std::optional<int> area_index(std::string_view id) const;

    /// Throws ValidationError if an invariant does not hold.
    void validate() const;
};

/// A tiny delimited-text table (comma or tab separated, one header row).
struct DelimitedTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line numbers of rows in the source file.
    std::vector<int> line_numbers;

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

DelimitedTable read_delimited(const std::filesystem::path& path);

struct CountColumns {
    std::string area = "area_id";
    std::string date = "date";
    std::string count = "count";
};

/// Dense counts from a long-format file, before populations are attached.
struct CountTable {
    std::vector<std::string> area_ids;
    std::vector<Date> dates;
    Eigen::MatrixXi counts;
    /// (area, date) cells absent from the file, filled with 0.
    int missing_cells = 0;
};

/// Areas sorted lexicographically, dates ascending and gap-free from the
/// first to the last date seen. Duplicate rows, negative or malformed counts
/// and bad dates are errors naming the line.
CountTable load_counts(const std::filesystem::path& path, const CountColumns& columns = {});

std::map<std::string, double> load_populations(const std::filesystem::path& path,
                                               std::string_view area_column = "area_id",
                                               std::string_view population_column = "population");

/// Joins counts and populations. Areas listed only in the population file get
/// an all-zero count row, added to `missing_cells`. Areas without a
/// population are an error.
SurveillanceDataset assemble_dataset(const CountTable& counts,
                                     const std::map<std::string, double>& populations,
                                     int* missing_cells = nullptr);

/// Undirected edge list over known area ids. Self-loops and unknown ids are
/// errors; so are isolated areas unless allow_islands is set.
AdjacencyGraph load_adjacency(const std::filesystem::path& path,
                              const std::vector<std::string>& area_ids,
                              bool allow_islands = false);

/// Writes counts.csv and population.csv in the formats read above.
void write_dataset(const SurveillanceDataset& dataset, const std::filesystem::path& dir);
void write_adjacency(const AdjacencyGraph& graph, const std::vector<std::string>& area_ids,
                     const std::filesystem::path& path);

/// The last `days` days of the dataset.
SurveillanceDataset last_days(const SurveillanceDataset& dataset, int days);

} // namespace stsurv
