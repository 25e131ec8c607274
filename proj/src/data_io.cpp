#include "stsurv/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stsurv/error.hpp"

namespace stsurv {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::string where(const std::filesystem::path& path, int line) {
    return path.string() + ":" + std::to_string(line);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

} // namespace

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const auto parse = [&](std::size_t pos, std::size_t len, auto& out) {
        const auto* first = text.data() + pos;
        const auto* last = first + len;
        const auto [ptr, ec] = std::from_chars(first, last, out);
        return ec == std::errc{} && ptr == last;
    };
    if (!parse(0, 4, y) || !parse(5, 2, m) || !parse(8, 2, d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<int> SurveillanceDataset::area_index(std::string_view id) const {
    const auto it = std::lower_bound(area_ids.begin(), area_ids.end(), id);
    if (it == area_ids.end() || *it != id) {
        return std::nullopt;
    }
    return static_cast<int>(it - area_ids.begin());
}

void SurveillanceDataset::validate() const {
    const auto I = num_areas();
    const auto J = num_days();
    if (I == 0 || J == 0) {
        throw ValidationError("dataset has no areas or no days");
    }
    if (counts.rows() != I || counts.cols() != J) {
        throw ValidationError("count matrix shape does not match areas x days");
    }
    if (static_cast<int>(populations.size()) != I) {
        throw ValidationError("population vector length does not match area count");
    }
    if (!std::is_sorted(area_ids.begin(), area_ids.end()) ||
        std::adjacent_find(area_ids.begin(), area_ids.end()) != area_ids.end()) {
        throw ValidationError("area ids must be unique and sorted");
    }
    for (int j = 1; j < J; ++j) {
        if (dates[static_cast<std::size_t>(j)] - dates[static_cast<std::size_t>(j - 1)] !=
            std::chrono::days{1}) {
            throw ValidationError("dates are not consecutive at " +
                                  format_date(dates[static_cast<std::size_t>(j)]));
        }
    }
    for (int i = 0; i < I; ++i) {
        if (!(populations[static_cast<std::size_t>(i)] > 0.0)) {
            throw ValidationError("population of area " + area_ids[static_cast<std::size_t>(i)] +
                                  " must be positive");
        }
    }
    if (counts.size() > 0 && counts.minCoeff() < 0) {
        throw ValidationError("negative count in dataset");
    }
}

std::size_t DelimitedTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw ValidationError("missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

DelimitedTable read_delimited(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    DelimitedTable table;
    std::string line;
    int line_no = 0;
    char delim = ',';
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || line.front() == '#') {
            continue;
        }
        if (!have_header) {
            delim = line.find('\t') != std::string::npos ? '\t' : ',';
            table.header = split(line, delim);
            have_header = true;
            continue;
        }
        auto fields = split(line, delim);
        if (fields.size() != table.header.size()) {
            throw ValidationError(where(path, line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) {
        throw ValidationError(path.string() + " is empty");
    }
    return table;
}

CountTable load_counts(const std::filesystem::path& path, const CountColumns& columns) {
    const auto table = read_delimited(path);
    const auto c_area = table.column(columns.area);
    const auto c_date = table.column(columns.date);
    const auto c_count = table.column(columns.count);
    if (table.rows.empty()) {
        throw ValidationError(path.string() + " has no data rows");
    }

    struct Row {
        std::string area;
        Date date;
        int count;
        int line;
    };
    std::vector<Row> rows;
    rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& f = table.rows[r];
        const int line = table.line_numbers[r];
        if (f[c_area].empty()) {
            throw ValidationError(where(path, line) + ": empty area id");
        }
        const auto date = parse_date(f[c_date]);
        if (!date) {
            throw ValidationError(where(path, line) + ": unparseable date '" + f[c_date] + "'");
        }
        long long count = 0;
        const auto& text = f[c_count];
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), count);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw ValidationError(where(path, line) + ": count '" + text + "' is not an integer");
        }
        if (count < 0) {
            throw ValidationError(where(path, line) + ": negative count " + text);
        }
        if (count > std::numeric_limits<int>::max()) {
            throw ValidationError(where(path, line) + ": count too large");
        }
        rows.push_back({f[c_area], *date, static_cast<int>(count), line});
    }

    std::set<std::string> areas;
    Date first = rows.front().date;
    Date last = rows.front().date;
    for (const auto& row : rows) {
        areas.insert(row.area);
        first = std::min(first, row.date);
        last = std::max(last, row.date);
    }

    CountTable out;
    out.area_ids.assign(areas.begin(), areas.end());
    for (Date d = first; d <= last; d += std::chrono::days{1}) {
        out.dates.push_back(d);
    }
    const auto I = static_cast<Eigen::Index>(out.area_ids.size());
    const auto J = static_cast<Eigen::Index>(out.dates.size());
    out.counts = Eigen::MatrixXi::Zero(I, J);
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(I, J);
    for (const auto& row : rows) {
        const auto i = std::lower_bound(out.area_ids.begin(), out.area_ids.end(), row.area) -
                       out.area_ids.begin();
        const auto j = (row.date - first).count();
        if (seen(i, j) != 0) {
            throw ValidationError(where(path, row.line) + ": duplicate row for area '" + row.area +
                                  "' on " + format_date(row.date) + " (first at line " +
                                  std::to_string(seen(i, j)) + ")");
        }
        seen(i, j) = row.line;
        out.counts(i, j) = row.count;
    }
    out.missing_cells = static_cast<int>((seen.array() == 0).count());
    return out;
}

std::map<std::string, double> load_populations(const std::filesystem::path& path,
                                               std::string_view area_column,
                                               std::string_view population_column) {
    const auto table = read_delimited(path);
    const auto c_area = table.column(area_column);
    const auto c_pop = table.column(population_column);
    std::map<std::string, double> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& f = table.rows[r];
        const int line = table.line_numbers[r];
        double value = 0.0;
        const auto& text = f[c_pop];
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw ValidationError(where(path, line) + ": population '" + text +
                                  "' is not a number");
        }
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw ValidationError(where(path, line) + ": population must be positive");
        }
        if (!out.emplace(f[c_area], value).second) {
            throw ValidationError(where(path, line) + ": duplicate population for area '" +
                                  f[c_area] + "'");
        }
    }
    if (out.empty()) {
        throw ValidationError(path.string() + " has no data rows");
    }
    return out;
}

SurveillanceDataset assemble_dataset(const CountTable& counts,
                                     const std::map<std::string, double>& populations,
                                     int* missing_cells) {
    for (const auto& id : counts.area_ids) {
        if (!populations.contains(id)) {
            throw ValidationError("area '" + id + "' has counts but no population");
        }
    }
    SurveillanceDataset ds;
    ds.dates = counts.dates;
    for (const auto& [id, pop] : populations) {
        ds.area_ids.push_back(id);
        ds.populations.push_back(pop);
    }
    const auto I = static_cast<Eigen::Index>(ds.area_ids.size());
    const auto J = static_cast<Eigen::Index>(ds.dates.size());
    ds.counts = Eigen::MatrixXi::Zero(I, J);
    int missing = counts.missing_cells;
    for (Eigen::Index i = 0; i < I; ++i) {
        const auto& id = ds.area_ids[static_cast<std::size_t>(i)];
        const auto it = std::lower_bound(counts.area_ids.begin(), counts.area_ids.end(), id);
        if (it != counts.area_ids.end() && *it == id) {
            ds.counts.row(i) = counts.counts.row(it - counts.area_ids.begin());
        } else {
            missing += static_cast<int>(J);
        }
    }
    if (missing_cells != nullptr) {
        *missing_cells = missing;
    }
    ds.validate();
    return ds;
}

AdjacencyGraph load_adjacency(const std::filesystem::path& path,
                              const std::vector<std::string>& area_ids, bool allow_islands) {
    const auto table = read_delimited(path);
    if (table.header.size() < 2) {
        throw ValidationError(path.string() + ": adjacency needs two columns");
    }
    const auto lookup = [&](const std::string& id, int line) {
        const auto it = std::lower_bound(area_ids.begin(), area_ids.end(), id);
        if (it == area_ids.end() || *it != id) {
            throw ValidationError(where(path, line) + ": unknown area id '" + id + "'");
        }
        return static_cast<int>(it - area_ids.begin());
    };
    std::vector<std::pair<int, int>> edges;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const int line = table.line_numbers[r];
        const int a = lookup(table.rows[r][0], line);
        const int b = lookup(table.rows[r][1], line);
        if (a == b) {
            throw ValidationError(where(path, line) + ": self-loop on area '" +
                                  table.rows[r][0] + "'");
        }
        edges.emplace_back(a, b);
    }
    AdjacencyGraph graph(static_cast<int>(area_ids.size()), edges);
    if (!allow_islands) {
        const auto islands = graph.isolated_areas();
        if (!islands.empty()) {
            throw ValidationError("area '" + area_ids[static_cast<std::size_t>(islands.front())] +
                                  "' has no neighbours (" + std::to_string(islands.size()) +
                                  " isolated areas); rerun with --allow-islands to accept");
        }
    }
    return graph;
}

void write_dataset(const SurveillanceDataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto counts = open_for_write(dir / "counts.csv");
    counts << "area_id,date,count\n";
    for (int i = 0; i < dataset.num_areas(); ++i) {
        for (int j = 0; j < dataset.num_days(); ++j) {
            counts << dataset.area_ids[static_cast<std::size_t>(i)] << ','
                   << format_date(dataset.dates[static_cast<std::size_t>(j)]) << ','
                   << dataset.counts(i, j) << '\n';
        }
    }
    auto pops = open_for_write(dir / "population.csv");
    pops << "area_id,population\n";
    pops.precision(17);
    for (int i = 0; i < dataset.num_areas(); ++i) {
        pops << dataset.area_ids[static_cast<std::size_t>(i)] << ','
             << dataset.populations[static_cast<std::size_t>(i)] << '\n';
    }
}

void write_adjacency(const AdjacencyGraph& graph, const std::vector<std::string>& area_ids,
                     const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "area_id_a,area_id_b\n";
    for (const auto& [a, b] : graph.edges()) {
        out << area_ids[static_cast<std::size_t>(a)] << ',' << area_ids[static_cast<std::size_t>(b)]
            << '\n';
    }
}

SurveillanceDataset last_days(const SurveillanceDataset& dataset, int days) {
    if (days < 1 || days > dataset.num_days()) {
        throw ValidationError("window of " + std::to_string(days) + " days is outside 1.." +
                              std::to_string(dataset.num_days()));
    }
    SurveillanceDataset out = dataset;
    const int start = dataset.num_days() - days;
    out.dates.assign(dataset.dates.begin() + start, dataset.dates.end());
    out.counts = dataset.counts.rightCols(days);
    return out;
}

} // namespace stsurv
