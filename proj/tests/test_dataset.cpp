// Loader and pair-view behavior: CSV parsing, schema validation, missing-data
// handling, and the content fingerprint.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <simpscan/dataset.hpp>

using namespace simpscan;

namespace {

SchemaConfig outcome_schema(const std::string& name) {
    SchemaConfig s;
    s.outcome = name;
    return s;
}

Dataset parse(const std::string& text, const SchemaConfig& schema) {
    std::istringstream in(text);
    std::ostringstream warnings;
    return parse_csv(in, schema, warnings);
}

std::string temp_path(const std::string& stem) {
    return ::testing::TempDir() + stem;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

} // namespace

TEST(CsvRecords, ParsesQuotesEscapesAndNewlines) {
    std::istringstream in("a,\"b,1\",c\r\n1,\"say \"\"hi\"\"\",3\n4,\"two\nlines\",6\n");
    auto recs = detail::read_csv_records(in);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0][1], "b,1");
    EXPECT_EQ(recs[1][1], "say \"hi\"");
    EXPECT_EQ(recs[2][1], "two\nlines");
    EXPECT_EQ(recs[0].size(), 3u);
}

TEST(CsvRecords, LastRecordWithoutTrailingNewline) {
    std::istringstream in("a,b\n1,2");
    auto recs = detail::read_csv_records(in);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[1][1], "2");
}

TEST(CsvRecords, UnterminatedQuoteThrows) {
    std::istringstream in("a,b\n1,\"oops");
    EXPECT_THROW(detail::read_csv_records(in), ParseError);
}

TEST(LoadCsv, ThreeColumnFileRowCountIsLinesMinusHeader) {
    auto ds = parse("y,a,b\n0,1,2\n1,3,4\n1,5,6\n", outcome_schema("y"));
    EXPECT_EQ(ds.n_rows(), 3u);
    EXPECT_EQ(ds.covariate_names(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.outcome(), (std::vector<double>{0.0, 1.0, 1.0}));
}

TEST(LoadCsv, NonBinaryOutcomeCitesRow) {
    // rows 2..6 hold valid outcomes; row 7 holds a 2
    const std::string text = "y,a\n0,1\n1,1\n0,1\n1,1\n0,1\n2,1\n";
    try {
        parse(text, outcome_schema("y"));
        FAIL() << "expected a parse failure";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 7u);
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
    }
}

TEST(LoadCsv, TrueFalseOutcomesAccepted) {
    auto ds = parse("y,a\ntrue,1\nfalse,2\n", outcome_schema("y"));
    EXPECT_EQ(ds.outcome(), (std::vector<double>{1.0, 0.0}));
}

TEST(LoadCsv, EmptyCovariateCellBecomesMissing) {
    auto ds = parse("y,a,b\n0,1,5\n1,,6\n1,3,7\n", outcome_schema("y"));
    EXPECT_EQ(ds.n_rows(), 3u);
    EXPECT_TRUE(std::isnan(ds.covariate("a")[1]));
    auto pv = pair_view(ds, "a", "b");
    EXPECT_EQ(pv.n, 2u);
    EXPECT_EQ(pv.rows, (std::vector<std::size_t>{0, 2}));
}

TEST(LoadCsv, NonNumericCovariateCellBecomesMissing) {
    auto ds = parse("y,a,b\n0,red,5\n1,2,6\n", outcome_schema("y"));
    EXPECT_TRUE(std::isnan(ds.covariate("a")[0]));
    EXPECT_EQ(ds.covariate("a")[1], 2.0);
}

TEST(LoadCsv, FullyNonNumericColumnIgnoredWithWarning) {
    std::istringstream in("y,color,b\n0,red,5\n1,blue,6\n");
    std::ostringstream warnings;
    auto ds = parse_csv(in, outcome_schema("y"), warnings);
    EXPECT_EQ(ds.covariate_names(), (std::vector<std::string>{"b"}));
    EXPECT_NE(warnings.str().find("color"), std::string::npos);
    EXPECT_THROW(ds.covariate("color"), UnknownColumn);
}

TEST(LoadCsv, MissingOutcomeColumnIsSchemaError) {
    EXPECT_THROW(parse("a,b\n1,2\n", outcome_schema("y")), SchemaError);
}

TEST(LoadCsv, DuplicateColumnIsSchemaError) {
    EXPECT_THROW(parse("y,a,a\n0,1,2\n", outcome_schema("y")), SchemaError);
}

TEST(LoadCsv, RaggedRowIsParseError) {
    EXPECT_THROW(parse("y,a,b\n0,1\n", outcome_schema("y")), ParseError);
}

TEST(LoadCsv, HeaderOnlyIsSchemaError) {
    EXPECT_THROW(parse("y,a\n", outcome_schema("y")), SchemaError);
    EXPECT_THROW(parse("", outcome_schema("y")), SchemaError);
}

TEST(LoadCsv, IncludeListRestrictsCovariates) {
    SchemaConfig s = outcome_schema("y");
    s.include = {"a", "c"};
    auto ds = parse("y,a,b,c\n0,1,2,3\n1,4,5,6\n", s);
    EXPECT_EQ(ds.covariate_names(), (std::vector<std::string>{"a", "c"}));
}

TEST(LoadCsv, ExcludeListDropsCovariates) {
    SchemaConfig s = outcome_schema("y");
    s.exclude = {"b"};
    auto ds = parse("y,a,b,c\n0,1,2,3\n1,4,5,6\n", s);
    EXPECT_EQ(ds.covariate_names(), (std::vector<std::string>{"a", "c"}));
}

TEST(LoadCsv, UnknownIncludeIsSchemaError) {
    SchemaConfig s = outcome_schema("y");
    s.include = {"nope"};
    EXPECT_THROW(parse("y,a\n0,1\n", s), SchemaError);
}

TEST(LoadCsv, MissingFileIsFileError) {
    EXPECT_THROW(load_csv(temp_path("no_such_file.csv"), outcome_schema("y")), FileError);
}

TEST(LoadCsv, ReadsFromDisk) {
    const std::string path = temp_path("roundtrip_basic.csv");
    write_file(path, "y,a\n0,1.5\n1,2.5\n");
    auto ds = load_csv(path, outcome_schema("y"));
    EXPECT_EQ(ds.n_rows(), 2u);
    EXPECT_EQ(ds.covariate("a")[1], 2.5);
    std::remove(path.c_str());
}

TEST(Dataset, ConstructionValidation) {
    EXPECT_THROW(Dataset::from_columns("y", {0.0, 2.0}, {{"a", {1.0, 2.0}}}), SchemaError);
    EXPECT_THROW(Dataset::from_columns("y", {0.0, 1.0}, {{"a", {1.0}}}), SchemaError);
    EXPECT_THROW(Dataset::from_columns("y", {}, {{"a", {}}}), SchemaError);
    EXPECT_THROW(Dataset::from_columns("y", {0.0}, {{"y", {1.0}}}), SchemaError);
}

TEST(PairView, NoMissingGivesIdentityMapping) {
    auto ds = Dataset::from_columns("y", {0, 1, 0}, {{"a", {1, 2, 3}}, {"b", {4, 5, 6}}});
    auto pv = pair_view(ds, "a", "b");
    EXPECT_EQ(pv.n, 3u);
    EXPECT_EQ(pv.rows, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(pv.x_j, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(pv.x_c, (std::vector<double>{4, 5, 6}));
}

TEST(PairView, MissingDroppedOnlyFromInvolvedPairs) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto ds = Dataset::from_columns(
        "y", {0, 1, 0, 1},
        {{"a", {1, 2, 3, 4}}, {"b", {5, nan, 7, 8}}, {"c", {9, 10, 11, 12}}});
    EXPECT_EQ(pair_view(ds, "a", "b").n, 3u);
    EXPECT_EQ(pair_view(ds, "a", "c").n, 4u);
    EXPECT_EQ(pair_view(ds, "b", "c").rows, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(PairView, SameColumnRejected) {
    auto ds = Dataset::from_columns("y", {0, 1}, {{"a", {1, 2}}, {"b", {3, 4}}});
    EXPECT_THROW(pair_view(ds, "a", "a"), SameColumn);
}

TEST(PairView, UnknownColumnRejected) {
    auto ds = Dataset::from_columns("y", {0, 1}, {{"a", {1, 2}}, {"b", {3, 4}}});
    EXPECT_THROW(pair_view(ds, "a", "zzz"), UnknownColumn);
    EXPECT_THROW(pair_view(ds, "y", "a"), UnknownColumn);
}

TEST(PairView, SurvivalIsSymmetric) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto ds = Dataset::from_columns(
        "y", {0, 1, 0, 1, 1},
        {{"a", {1, nan, 3, 4, nan}}, {"b", {5, 6, nan, 8, 9}}, {"c", {1, 2, 3, 4, 5}}});
    const std::vector<std::string> names = ds.covariate_names();
    for (const auto& p : names)
        for (const auto& q : names) {
            if (p == q) continue;
            EXPECT_EQ(pair_view(ds, p, q).n, pair_view(ds, q, p).n) << p << " vs " << q;
        }
}

TEST(Fingerprint, StableAcrossPathsAndSensitiveToContent) {
    const std::string text = "y,a,b\n0,1,2\n1,3,4\n";
    const std::string p1 = temp_path("fp_one.csv");
    const std::string p2 = temp_path("fp_two.csv");
    write_file(p1, text);
    write_file(p2, text);
    auto d1 = load_csv(p1, outcome_schema("y"));
    auto d2 = load_csv(p2, outcome_schema("y"));
    EXPECT_EQ(d1.fingerprint(), d2.fingerprint());
    EXPECT_EQ(d1.fingerprint().size(), 16u);

    write_file(p2, "y,a,b\n0,1,2\n1,3,5\n");
    auto d3 = load_csv(p2, outcome_schema("y"));
    EXPECT_NE(d1.fingerprint(), d3.fingerprint());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST(Fingerprint, MissingCellsHashConsistently) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto d1 = Dataset::from_columns("y", {0, 1}, {{"a", {nan, 2}}, {"b", {1, 2}}});
    auto d2 = Dataset::from_columns("y", {0, 1}, {{"a", {nan, 2}}, {"b", {1, 2}}});
    EXPECT_EQ(d1.fingerprint(), d2.fingerprint());
}
