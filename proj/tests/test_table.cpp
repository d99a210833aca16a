#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hfx/errors.hpp"
#include "hfx/table.hpp"

using namespace hfx;
using hfx::test::rel_diff;
using hfx::test::thrown_code;
using hfx::test::thrown_exit;

namespace {

TableMeta demo_meta() {
    TableMeta m;
    m.unit = "MHz";
    m.lattice_parameter = 3.567;
    m.grid_dims = {96, 96, 96};
    m.backend = "isolated_direct";
    m.exclusion = "voxel_center C=0.79 N=0.79";
    m.constants_version = "codata-2018";
    m.axis = Vec3(1, 1, 1).normalized();
    m.defect_center = Vec3(4.45875, 4.45875, 4.45875);
    return m;
}

std::vector<SiteResult> demo_rows() {
    std::vector<SiteResult> rows(3);
    rows[0].site_index = 7;
    rows[0].species = "C";
    rows[0].isotope = "13C";
    rows[0].in_cell = true;
    rows[0].pos = Vec3(1.26324, 1.26324, 0.0);
    rows[0].distance = 1.7865;
    rows[0].a_mhz = Sym3{130.234567890123, -2.5, 17.0, 0.125, -0.0625, 3.14159265358979};
    rows[0].fc_mhz = 112.5;
    rows[0].contact_present = true;
    rows[0].one_center_present = false;
    rows[0].a_zz_mhz = 129.87;
    rows[0].a_z_mhz = 130.11;

    rows[1].site_index = 3;
    rows[1].species = "N";
    rows[1].isotope = "14N";
    rows[1].in_cell = true;
    rows[1].pos = Vec3(-0.89175, 0.89175, 0.89175);
    rows[1].distance = 1.5445;
    rows[1].a_mhz = Sym3{-1.98, -1.98, -2.12, 0, 0, 0};
    rows[1].fc_mhz = -2.1;
    rows[1].contact_present = true;
    rows[1].one_center_present = true;
    rows[1].a_zz_mhz = -2.12;
    rows[1].a_z_mhz = 2.12;

    rows[2].site_index = 940;
    rows[2].species = "C";
    rows[2].isotope = "13C";
    rows[2].in_cell = false;
    rows[2].pos = Vec3(12.48, -3.567, 8.9175);
    rows[2].distance = 15.7;
    rows[2].a_mhz = Sym3{1.5e-4, -0.5e-4, -1.0e-4, 2e-5, 0, -3.3e-6};
    rows[2].fc_mhz = 0.0;
    rows[2].contact_present = false;
    rows[2].one_center_present = false;
    rows[2].a_zz_mhz = -9.5e-5;
    rows[2].a_z_mhz = 1.1e-4;
    return rows;
}

std::string write_str(const TableMeta& m, const std::vector<SiteResult>& rows) {
    std::ostringstream out;
    write_tensor_table(out, m, rows);
    return out.str();
}

TensorTable read_str(const std::string& s) {
    std::istringstream in(s);
    return read_tensor_table(in);
}

} // namespace

TEST_CASE("tensor table round trips values and metadata") {
    const std::string text = write_str(demo_meta(), demo_rows());
    const TensorTable t = read_str(text);

    CHECK(t.meta.unit == "MHz");
    CHECK(t.meta.lattice_parameter == 3.567);
    CHECK(t.meta.grid_dims[0] == 96);
    CHECK(t.meta.backend == "isolated_direct");
    CHECK(t.meta.exclusion == "voxel_center C=0.79 N=0.79");
    CHECK(t.meta.constants_version == "codata-2018");
    CHECK((t.meta.axis - Vec3(1, 1, 1).normalized()).norm() < 1e-11);

    REQUIRE(t.rows.size() == 3);
    // Rows sorted by (distance, site_index): N at 1.54, C at 1.79, far C last.
    CHECK(t.rows[0].site_index == 3);
    CHECK(t.rows[1].site_index == 7);
    CHECK(t.rows[2].site_index == 940);
    CHECK(t.rows[0].species == "N");
    CHECK(t.rows[0].isotope == "14N");
    CHECK(t.rows[0].in_cell);
    CHECK(!t.rows[2].in_cell);
    CHECK(t.rows[0].one_center_present);
    CHECK(!t.rows[2].contact_present);

    const SiteResult& orig = demo_rows()[0];
    const SiteResult& got = t.rows[1];
    CHECK(rel_diff(got.a_mhz.xx, orig.a_mhz.xx) < 1e-11);
    CHECK(rel_diff(got.a_mhz.yz, orig.a_mhz.yz) < 1e-11);
    CHECK(rel_diff(got.fc_mhz, orig.fc_mhz) < 1e-11);
    CHECK(rel_diff(got.a_z_mhz, orig.a_z_mhz) < 1e-11);
    CHECK(rel_diff(got.pos[0], orig.pos[0]) < 1e-11);
}

TEST_CASE("rewriting a parsed table is byte-identical") {
    // 12 significant digits make print -> parse -> print a fixpoint.
    const std::string first = write_str(demo_meta(), demo_rows());
    const TensorTable t = read_str(first);
    const std::string second = write_str(t.meta, t.rows);
    CHECK(first == second);
}

TEST_CASE("kHz tables scale on write and normalize back on read") {
    TableMeta meta = demo_meta();
    meta.unit = "kHz";
    const std::string text = write_str(meta, demo_rows());
    CHECK(text.find("# unit = kHz") != std::string::npos);

    // The far site's 1.5e-4 MHz xx entry appears as 0.15 kHz.
    CHECK(text.find("0.15,") != std::string::npos);

    const TensorTable t = read_str(text);
    CHECK(t.meta.unit == "MHz"); // normalized representation
    const SiteResult& far = t.rows[2];
    CHECK(rel_diff(far.a_mhz.xx, 1.5e-4) < 1e-11);
    CHECK(rel_diff(far.a_zz_mhz, -9.5e-5) < 1e-11);
}

TEST_CASE("row order is deterministic under distance ties") {
    std::vector<SiteResult> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].site_index = 2 - i; // 2, 1, 0
        rows[i].species = "C";
        rows[i].isotope = "13C";
        rows[i].distance = 1.0; // all tied
    }
    const TensorTable t = read_str(write_str(demo_meta(), rows));
    CHECK(t.rows[0].site_index == 0);
    CHECK(t.rows[1].site_index == 1);
    CHECK(t.rows[2].site_index == 2);
}

TEST_CASE("asymmetric tensor entries are symmetrized on read") {
    std::string text = write_str(demo_meta(), demo_rows());
    // Perturb a_xy (column 9 zero-based in the first data row) away from a_yx.
    const size_t header_end = text.find("A_zz,A_z\n") + 9;
    std::string head = text.substr(0, header_end);
    std::string body = text.substr(header_end);
    const size_t line_end = body.find('\n');
    std::string row = body.substr(0, line_end);
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ls(row);
    while (std::getline(ls, cur, ',')) fields.push_back(cur);
    fields[9] = "2";  // a_xy
    fields[11] = "4"; // a_yx
    std::string patched = head;
    for (size_t i = 0; i < fields.size(); ++i) patched += (i ? "," : "") + fields[i];
    patched += body.substr(line_end);

    const TensorTable t = read_str(patched);
    CHECK(t.rows[0].a_mhz.xy == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("structural problems raise NotComputed with exit code 3") {
    const std::string good = write_str(demo_meta(), demo_rows());

    SUBCASE("missing version marker") {
        std::string text = good;
        const size_t nl = text.find('\n');
        text = text.substr(nl + 1);
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
        CHECK(thrown_exit([&] { read_str(text); }) == 3);
    }
    SUBCASE("empty stream") {
        CHECK(thrown_code([&] { read_str(""); }) == "NotComputed");
    }
    SUBCASE("wrong column header") {
        std::string text = good;
        const size_t pos = text.find("site_index,");
        text.replace(pos, 11, "siteindex,,");
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
    }
    SUBCASE("short data row") {
        std::string text = good;
        text += "5,C,13C,in_cell,0,0,0\n";
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
    }
    SUBCASE("unparseable number") {
        std::string text = good;
        const size_t pos = text.find("130.23456789"); // %.12g rendering of a_xx
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 12, "one-thirty--");
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
    }
    SUBCASE("bad region field") {
        std::string text = good;
        const size_t pos = text.find("support");
        text.replace(pos, 7, "outside");
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
    }
    SUBCASE("unknown unit") {
        std::string text = good;
        const size_t pos = text.find("# unit = MHz");
        text.replace(pos, 12, "# unit = GHz");
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
    }
    SUBCASE("malformed grid_dims") {
        std::string text = good;
        const size_t pos = text.find("# grid_dims = 96 96 96");
        text.replace(pos, 22, "# grid_dims = 96 96   ");
        CHECK(thrown_code([&] { read_str(text); }) == "NotComputed");
    }
}

TEST_CASE("free-form comments in the metadata block are ignored") {
    std::string text = write_str(demo_meta(), demo_rows());
    const size_t pos = text.find("# unit");
    text.insert(pos, "# produced for the acceptance fixtures\n");
    const TensorTable t = read_str(text);
    CHECK(t.rows.size() == 3);
}
