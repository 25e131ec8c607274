#include <gtest/gtest.h>

#include "stsurv/data_io.hpp"
#include "stsurv/error.hpp"
#include "test_util.hpp"

using namespace stsurv;
using testutil::temp_dir;
using testutil::write_file;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Dates, StrictIsoParsing) {
    const auto d = parse_date("2020-03-06");
    ASSERT_TRUE(d);
    EXPECT_EQ(format_date(*d), "2020-03-06");
    EXPECT_FALSE(parse_date("2020-3-6"));
    EXPECT_FALSE(parse_date("2020-02-30"));
    EXPECT_FALSE(parse_date("2020-13-01"));
    EXPECT_FALSE(parse_date("06/03/2020"));
    EXPECT_FALSE(parse_date("2020-03-06x"));
    EXPECT_TRUE(parse_date("2020-02-29"));
    EXPECT_FALSE(parse_date("2021-02-29"));
}

TEST(LoadCounts, DenseMatrixWithMissingCells) {
    const auto dir = temp_dir("c");
    write_file(dir / "c.csv",
               "# comment\n"
               "area_id,date,count\n"
               "b,2020-03-01,4\n"
               "a,2020-03-01,1\n"
               "\n"
               "a,2020-03-03,7\n");
    const auto t = load_counts(dir / "c.csv");
    EXPECT_EQ(t.area_ids, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(t.dates.size(), 3u);
    EXPECT_EQ(format_date(t.dates[1]), "2020-03-02");
    EXPECT_EQ(t.counts(0, 0), 1);
    EXPECT_EQ(t.counts(0, 2), 7);
    EXPECT_EQ(t.counts(1, 0), 4);
    EXPECT_EQ(t.counts(1, 1), 0);
    EXPECT_EQ(t.missing_cells, 3);
}

TEST(LoadCounts, TabSeparatedAndCustomColumns) {
    const auto dir = temp_dir("t");
    write_file(dir / "c.tsv", "day\tregion\tcases\n2020-01-01\tx\t3\n2020-01-02\tx\t5\n");
    const auto t = load_counts(dir / "c.tsv", {"region", "day", "cases"});
    EXPECT_EQ(t.counts.cols(), 2);
    EXPECT_EQ(t.counts(0, 1), 5);
}

TEST(LoadCounts, ErrorsNameTheLine) {
    const auto dir = temp_dir("e");
    const auto check = [&](const std::string& body, const std::string& needle) {
        write_file(dir / "c.csv", "area_id,date,count\n" + body);
        const auto msg = error_of([&] { load_counts(dir / "c.csv"); });
        EXPECT_NE(msg.find(needle), std::string::npos) << msg;
        EXPECT_NE(msg.find(":3"), std::string::npos) << msg;
    };
    check("a,2020-03-01,1\na,2020-03-01,2\n", "duplicate");
    check("a,2020-03-01,1\na,2020-03-02,-2\n", "negative");
    check("a,2020-03-01,1\na,2020-03-02,2.5\n", "not an integer");
    check("a,2020-03-01,1\na,2020-14-02,2\n", "date");
    check("a,2020-03-01,1\na,2020-03-02\n", "expected");
    EXPECT_NE(error_of([&] { load_counts(dir / "absent.csv"); }).find("cannot open"),
              std::string::npos);
    write_file(dir / "h.csv", "area,date,count\n");
    EXPECT_NE(error_of([&] { load_counts(dir / "h.csv"); }).find("missing column"),
              std::string::npos);
}

TEST(AssembleDataset, PopulationOnlyAreasGetZeroRows) {
    const auto dir = temp_dir("a");
    write_file(dir / "c.csv", "area_id,date,count\nb,2020-03-01,4\nb,2020-03-02,6\n");
    write_file(dir / "p.csv", "area_id,population\na,1000\nb,2500.5\n");
    int missing = -1;
    const auto ds = assemble_dataset(load_counts(dir / "c.csv"), load_populations(dir / "p.csv"),
                                     &missing);
    EXPECT_EQ(ds.area_ids, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.counts.row(0).sum(), 0);
    EXPECT_EQ(ds.counts(1, 1), 6);
    EXPECT_EQ(missing, 2);
    EXPECT_DOUBLE_EQ(ds.populations[1], 2500.5);
    EXPECT_EQ(ds.area_index("b"), 1);
    EXPECT_FALSE(ds.area_index("z"));

    write_file(dir / "p2.csv", "area_id,population\na,1000\n");
    EXPECT_NE(error_of([&] {
                  assemble_dataset(load_counts(dir / "c.csv"), load_populations(dir / "p2.csv"));
              }).find("no population"),
              std::string::npos);
    write_file(dir / "p3.csv", "area_id,population\na,0\n");
    EXPECT_THROW(load_populations(dir / "p3.csv"), ValidationError);
}

TEST(LoadAdjacency, ValidatesIdsLoopsAndIslands) {
    const auto dir = temp_dir("g");
    const std::vector<std::string> ids{"a", "b", "c"};
    write_file(dir / "ok.csv", "area_id_a,area_id_b\na,b\nb,c\nc,b\n");
    const auto g = load_adjacency(dir / "ok.csv", ids);
    EXPECT_EQ(g.edges().size(), 2u);

    write_file(dir / "unknown.csv", "from,to\na,z\n");
    EXPECT_NE(error_of([&] { load_adjacency(dir / "unknown.csv", ids); }).find("unknown area id"),
              std::string::npos);
    write_file(dir / "loop.csv", "from,to\na,a\n");
    EXPECT_NE(error_of([&] { load_adjacency(dir / "loop.csv", ids); }).find("self-loop"),
              std::string::npos);
    write_file(dir / "island.csv", "from,to\na,b\n");
    EXPECT_NE(error_of([&] { load_adjacency(dir / "island.csv", ids); }).find("'c'"),
              std::string::npos);
    const auto with_island = load_adjacency(dir / "island.csv", ids, true);
    EXPECT_EQ(with_island.isolated_areas(), std::vector<int>{2});
}

TEST(WriteDataset, RoundTrip) {
    const auto dir = temp_dir("w");
    SurveillanceDataset ds;
    ds.area_ids = {"a01", "a02"};
    const auto start = *parse_date("2020-12-30");
    for (int j = 0; j < 4; ++j) {
        ds.dates.push_back(start + std::chrono::days{j});
    }
    ds.counts.resize(2, 4);
    ds.counts << 1, 2, 3, 4, 0, 0, 9, 100;
    ds.populations = {12345.678901234567, 1e6};
    write_dataset(ds, dir);
    const auto back = assemble_dataset(load_counts(dir / "counts.csv"),
                                       load_populations(dir / "population.csv"));
    EXPECT_EQ(back.area_ids, ds.area_ids);
    EXPECT_EQ(back.dates, ds.dates);
    EXPECT_EQ(back.counts, ds.counts);
    EXPECT_EQ(back.populations, ds.populations);

    const auto tail = last_days(ds, 2);
    EXPECT_EQ(tail.num_days(), 2);
    EXPECT_EQ(format_date(tail.dates.front()), "2021-01-01");
    EXPECT_EQ(tail.counts(1, 1), 100);
    EXPECT_THROW(last_days(ds, 5), ValidationError);
    EXPECT_THROW(last_days(ds, 0), ValidationError);
}
