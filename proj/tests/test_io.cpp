#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "hre/csv_io.hpp"
#include "hre/errors.hpp"
#include "hre/fixtures.hpp"
#include "hre/report.hpp"

using namespace hre;

namespace {

PanelDataset parse(const std::string& text, CsvPanelFormat fmt) {
    std::istringstream in(text);
    return parse_panel_csv(in, "mem.csv", fmt);
}

CsvPanelFormat with_x() {
    CsvPanelFormat f;
    f.covariate_columns = {"x"};
    return f;
}

std::string error_text(const std::string& text, CsvPanelFormat fmt) {
    try {
        parse(text, fmt);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("parse a small panel") {
    const PanelDataset d = parse("x,group,y\n1.5,b,2\n2.5,a,3\n3.5,b,4\n", with_x());
    REQUIRE(d.num_groups() == 2);
    CHECK(d.group(0).id == "b");  // first occurrence order
    CHECK(d.group(1).id == "a");
    CHECK(d.group(0).responses == std::vector<double>{2.0, 4.0});
    CHECK(d.group(0).design(0, 0) == 1.0);
    CHECK(d.group(0).design(1, 1) == 3.5);
    CHECK(d.group(1).design(0, 1) == 2.5);
}

TEST_CASE("headerless files use column positions") {
    CsvPanelFormat f;
    f.has_header = false;
    f.group_column = "1";
    f.response_column = "3";
    f.covariate_columns = {"2"};
    const PanelDataset d = parse("g1,0.5,1.25\ng1,0.75,2\n", f);
    CHECK(d.num_observations() == 2);
    CHECK(d.group(0).responses[0] == 1.25);
    CHECK(d.group(0).design(1, 1) == 0.75);
}

TEST_CASE("parse errors name the row and column") {
    const std::string bad_y = error_text("group,y,x\na,1,0\na,zz,1\n", with_x());
    CHECK(bad_y.find("row 3") != std::string::npos);
    CHECK(bad_y.find("'y'") != std::string::npos);
    CHECK(error_text("group,y,x\na,-1,0\n", with_x()).find("positive") != std::string::npos);
    CHECK(error_text("group,y,x\na,0,0\n", with_x()).find("row 2") != std::string::npos);
    CHECK(error_text("group,y\na,1\n", with_x()).find("'x'") != std::string::npos);
    CHECK(error_text("group,y,x\na,1\n", with_x()).find("too few") != std::string::npos);
    CHECK(error_text("group,y,x\na,1,inf\n", with_x()).find("finite") != std::string::npos);
    CHECK(error_text("group,y,x\n", with_x()).find("no data") != std::string::npos);
    CHECK(error_text("", with_x()).find("empty") != std::string::npos);
    CHECK_THROWS_AS(read_panel_csv("/nonexistent/file.csv", with_x()), ParseError);
}

TEST_CASE("write then read round-trips exactly") {
    const PanelDataset d = generate_shaped(cakes_shape());
    std::ostringstream out;
    write_panel_csv(out, d, {"temperature"});
    CsvPanelFormat f;
    f.covariate_columns = {"temperature"};
    std::istringstream in(out.str());
    const PanelDataset back = parse_panel_csv(in, "rt.csv", f);
    CHECK(dataset_digest(back) == dataset_digest(d));
    for (std::size_t i = 0; i < d.num_groups(); ++i) CHECK(back.group(i).responses == d.group(i).responses);
    CHECK_THROWS_AS(write_panel_csv(out, d, {}), DimensionMismatch);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(fnv1a64("bar", fnv1a64("foo")) == fnv1a64("foobar"));
}

TEST_CASE("digest is sensitive to values and labels") {
    const PanelDataset d = generate_shaped(sleepstudy_shape());
    const std::string base = dataset_digest(d);
    CHECK(base.size() == 16);
    std::vector<Group> gs = d.groups();
    gs[3].responses[2] = std::nextafter(gs[3].responses[2], 1e300);
    CHECK(dataset_digest(PanelDataset(gs)) != base);
    gs = d.groups();
    gs[0].id = "x";
    CHECK(dataset_digest(PanelDataset(gs)) != base);
}

TEST_CASE("shaped fixtures") {
    const ShapedFixture c = cakes_shape();
    const PanelDataset d = generate_shaped(c);
    CHECK(d.num_groups() == 15);
    CHECK(d.num_observations() == 90);
    CHECK(d.group(14).id == "15");
    CHECK(d.group(2).design(5, 1) == 225.0);
    CHECK(dataset_digest(generate_shaped(c)) == dataset_digest(d));
    CHECK(generate_shaped(sleepstudy_shape()).num_observations() == 180);
    CHECK(shape_by_name("sleepstudy").K == 18);
    CHECK_THROWS_AS(shape_by_name("iris"), DomainError);
}

TEST_CASE("committed fixture files match the generator") {
    for (const auto& [file, shape] : {std::pair{"cakes_shaped.csv", cakes_shape()},
                                      std::pair{"sleepstudy_shaped.csv", sleepstudy_shape()}}) {
        CsvPanelFormat f;
        f.covariate_columns = {shape.covariate_name};
        const PanelDataset d = read_panel_csv(std::string(HRE_SOURCE_DIR) + "/data/" + file, f);
        CHECK(dataset_digest(d) == dataset_digest(generate_shaped(shape)));
    }
}

TEST_CASE("shortest round-trip number formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-8) == "1e-08");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
