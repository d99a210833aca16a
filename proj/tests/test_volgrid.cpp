#include <doctest.h>

#include <random>
#include <sstream>

#include "hfx/volgrid.hpp"
#include "helpers.hpp"

using namespace hfx;
using namespace hfx::test;

namespace {

AtomRoster tiny_roster() {
    AtomRoster r;
    r.species = {{"C", 2}, {"N", 1}};
    r.positions = {Vec3(0.0, 0.0, 0.0), Vec3(0.25, 0.25, 0.25), Vec3(0.5, 0.5, 0.5)};
    return r;
}

// Hand-built two-block file where the blocks differ, to pin "spin is the
// second block".
std::string two_block_text() {
    std::ostringstream os;
    os << "comment\n1.0\n";
    os << " 2 0 0\n 0 2 0\n 0 0 2\n";
    os << "C\n1\nDirect\n 0 0 0\n\n";
    os << "2 2 2\n";
    for (int i = 0; i < 8; ++i) os << " 1.0";
    os << "\n";
    os << "augmentation occupancies 1 4\n 0.1 0.2 0.3 0.4\n"; // skipped section
    os << "2 2 2\n";
    for (int i = 0; i < 8; ++i) os << " " << i;
    os << "\n";
    return os.str();
}

} // namespace

TEST_CASE("two-block file returns the spin (second) block, volume-normalized") {
    std::istringstream in(two_block_text());
    auto [grid, roster] = parse_volumetric(in);
    CHECK(grid.dims[0] == 2);
    CHECK(roster.total() == 1);
    const double vol = 8.0;
    for (int i = 0; i < 8; ++i) CHECK(grid.values[i] == doctest::Approx(i / vol));
}

TEST_CASE("single block needs the explicit opt-in") {
    const std::string one_block =
        "c\n1.0\n 2 0 0\n 0 2 0\n 0 0 2\nC\n1\nDirect\n 0 0 0\n\n1 1 1\n 3.5\n";
    {
        std::istringstream in(one_block);
        CHECK(thrown_code([&] { parse_volumetric(in); }) == "MissingSpinBlock");
    }
    {
        std::istringstream in(one_block);
        ParseOptions opt;
        opt.single_block_is_spin = true;
        auto [grid, roster] = parse_volumetric(in, opt);
        CHECK(grid.values[0] == doctest::Approx(3.5 / 8.0));
    }
}

TEST_CASE("malformed inputs raise typed parse errors") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        ParseOptions opt;
        opt.single_block_is_spin = true;
        return parse_volumetric(in, opt);
    };
    // dims line not integers
    CHECK(thrown_code([&] {
              parse("c\n1.0\n 2 0 0\n 0 2 0\n 0 0 2\nC\n1\nDirect\n 0 0 0\n\nx y z\n 1\n");
          }) == "MalformedGrid");
    // too few values in the block
    CHECK(thrown_code([&] {
              parse("c\n1.0\n 2 0 0\n 0 2 0\n 0 0 2\nC\n1\nDirect\n 0 0 0\n\n2 2 2\n 1 2 3\n");
          }) == "MalformedGrid");
    // singular lattice
    CHECK(thrown_code([&] {
              parse("c\n1.0\n 1 0 0\n 1 0 0\n 0 0 1\nC\n1\nDirect\n 0 0 0\n\n1 1 1\n 1\n");
          }) == "BadGeometry");
    // negative scale factor
    CHECK(thrown_code([&] {
              parse("c\n-1.0\n 1 0 0\n 0 1 0\n 0 0 1\nC\n1\nDirect\n 0 0 0\n\n1 1 1\n 1\n");
          }) == "BadGeometry");
    // species counts disagree with symbols
    CHECK(thrown_code([&] {
              parse("c\n1.0\n 1 0 0\n 0 1 0\n 0 0 1\nC N\n1\nDirect\n 0 0 0\n\n1 1 1\n 1\n");
          }) == "MalformedGrid");
    // truncated file
    CHECK(thrown_code([&] { parse("c\n1.0\n 1 0 0\n 0 1 0\n"); }) == "MalformedGrid");
}

TEST_CASE("write/parse round trip preserves values at printed precision") {
    VolumetricGrid g = random_grid(3.7, 5, 99, -2.0, 2.0);
    const AtomRoster r = tiny_roster();
    std::ostringstream os;
    write_volumetric(os, g, r);

    std::istringstream in(os.str());
    auto [g2, r2] = parse_volumetric(in);
    REQUIRE(g2.dims == g.dims);
    REQUIRE(r2.total() == r.total());
    CHECK(r2.species_of(2) == "N");
    for (size_t i = 0; i < g.values.size(); ++i)
        CHECK(std::fabs(g2.values[i] - g.values[i]) <= 1e-10 * std::fabs(g.values[i]) + 1e-15);
    CHECK((g2.cell.lattice - g.cell.lattice).cwiseAbs().maxCoeff() < 1e-10);

    // A second pass is a fixpoint: printing already-printed values is exact.
    std::ostringstream os2;
    write_volumetric(os2, g2, r2);
    std::istringstream in2(os2.str());
    auto [g3, r3] = parse_volumetric(in2);
    for (size_t i = 0; i < g2.values.size(); ++i) CHECK(g3.values[i] == g2.values[i]);
}

TEST_CASE("single-block writer round trips with the opt-in") {
    VolumetricGrid g = random_grid(2.0, 3, 5);
    const AtomRoster r = tiny_roster();
    std::ostringstream os;
    write_volumetric_single(os, g, r);
    std::istringstream in(os.str());
    ParseOptions opt;
    opt.single_block_is_spin = true;
    auto [g2, r2] = parse_volumetric(in, opt);
    for (size_t i = 0; i < g.values.size(); ++i)
        CHECK(std::fabs(g2.values[i] - g.values[i]) <= 1e-10 * std::fabs(g.values[i]) + 1e-15);
}

TEST_CASE("grid helpers: integral, spacing, flat order") {
    VolumetricGrid g = spike_grid(8.0, 4, 1, 2, 3, 2.5);
    CHECK(g.integral() == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(g.spacing()[0] == doctest::Approx(2.0));
    // flat index is x-fastest
    CHECK(g.values[1 + 4 * (2 + 4 * 3)] != 0.0);
    CHECK(g.frac_of(1, 2, 3)[2] == doctest::Approx(0.75));
}

TEST_CASE("roster validation") {
    AtomRoster r = tiny_roster();
    r.positions.pop_back();
    CHECK(thrown_code([&] { r.validate(); }) == "MalformedGrid");
    AtomRoster ok = tiny_roster();
    CHECK(ok.species_of(0) == "C");
    CHECK(ok.species_of(1) == "C");
    CHECK(thrown_code([&] { ok.species_of(5); }) == "OutOfDomain");
}
