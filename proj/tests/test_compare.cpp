#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hfx/compare.hpp"
#include "hfx/errors.hpp"

using namespace hfx;
using hfx::test::thrown_code;
using hfx::test::thrown_exit;

namespace {

std::vector<ExperimentalRecord> load_str(const std::string& s, DatasetTag tag = DatasetTag::user) {
    std::istringstream in(s);
    return load_dataset(in, tag);
}

std::vector<TheoryEntry> demo_theory() {
    return {
        {0, 10.8, 2.0, Vec3(1, 0, 0)},
        {1, -10.2, 3.0, Vec3(0, 2, 0)},
        {2, 9.8, 1.5, Vec3(0, 0, 3)},
        {3, 50.0, 4.0, Vec3(4, 0, 0)},
    };
}

} // namespace

TEST_CASE("dataset loading") {
    SUBCASE("header, comments, four and seven column rows") {
        const auto recs = load_str(
            "id, quantity, value_MHz, unc_MHz\n"
            "# measured splittings\n"
            "C1, A_zz, 130.2, 0.4\n"
            "C2, A_zz, -8.94, 0.05, 1.26, 1.26, 0.0\n"
            "C3, A_zz, 2.5, 0.0, , , \n");
        REQUIRE(recs.size() == 3);
        CHECK(recs[0].id == "C1");
        CHECK(recs[0].quantity == Quantity::A_zz);
        CHECK(recs[0].value_mhz == 130.2);
        CHECK(recs[0].unc_mhz == 0.4);
        CHECK(!recs[0].position.has_value());
        REQUIRE(recs[1].position.has_value());
        CHECK((*recs[1].position - Vec3(1.26, 1.26, 0.0)).norm() == 0.0);
        CHECK(!recs[2].position.has_value()); // empty position fields mean none
        CHECK(recs[2].tag == DatasetTag::user);
    }

    SUBCASE("a first row with a numeric value column is data") {
        const auto recs = load_str("N1, A_z, 3.03, 0.03\n");
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].quantity == Quantity::A_z);
    }

    SUBCASE("quantity is uniform within a stream") {
        CHECK(thrown_code([] {
                  load_str("a, A_z, 1, 0\nb, A_zz, 2, 0\n");
              }) == "BadDataset");
    }

    SUBCASE("named datasets pin their quantity") {
        CHECK(load_str("a, A_z, 1, 0\n", DatasetTag::I).front().tag == DatasetTag::I);
        CHECK(thrown_code([] { load_str("a, A_zz, 1, 0\n", DatasetTag::I); }) == "BadDataset");
        CHECK(thrown_code([] { load_str("a, A_z, 1, 0\n", DatasetTag::II); }) == "BadDataset");
        CHECK(load_str("a, A_zz, 1, 0\n", DatasetTag::III).front().quantity == Quantity::A_zz);
    }

    SUBCASE("malformed rows raise BadDataset with exit code 3") {
        CHECK(thrown_code([] { load_str("a, A_zz, 1\n"); }) == "BadDataset");
        CHECK(thrown_code([] { load_str("a, A_zz, 1, 0, 1, 2\n"); }) == "BadDataset");
        CHECK(thrown_code([] { load_str("a, B_zz, 1, 0\n"); }) == "BadDataset");
        CHECK(thrown_code([] { load_str("a, A_zz, ten, 0\n"); }) == "BadDataset");
        CHECK(thrown_code([] { load_str("a, A_zz, 1, -0.1\n"); }) == "BadDataset");
        CHECK(thrown_code([] { load_str(", A_zz, 1, 0\n"); }) == "BadDataset");
        CHECK(thrown_code([] { load_str("a, A_zz, 1, 0, 1.0, , \n"); }) == "BadDataset");
        CHECK(thrown_exit([] { load_str("a, A_zz, 1\n"); }) == 3);
    }

    SUBCASE("blank and comment-only streams load as empty") {
        CHECK(load_str("").empty());
        CHECK(load_str("# nothing\n\n").empty());
    }
}

TEST_CASE("error metrics reproduce hand-computed values") {
    // ARE: 0.1, 0.2, 0.25 -> MAPE = MARE = 55/3 %. SRE: 0.1, -0.2, 0.25
    // -> MSRE = 5 %.
    const std::vector<std::pair<double, double>> pairs = {{11, 10}, {8, 10}, {-5, -4}};
    const ErrorMetrics m = error_metrics(pairs);
    CHECK(m.n_used == 3);
    CHECK(m.n_excluded_zero == 0);
    CHECK(m.mape_pct == doctest::Approx(55.0 / 3.0).epsilon(1e-12));
    CHECK(m.mare_pct == m.mape_pct);
    CHECK(m.msre_pct == doctest::Approx(5.0).epsilon(1e-12));
    REQUIRE(m.are.size() == 3);
    CHECK(m.are[2] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("zero experimental values are excluded with a count") {
    const ErrorMetrics m = error_metrics({{1.0, 0.0}, {2.0, 2.0}});
    CHECK(m.n_used == 1);
    CHECK(m.n_excluded_zero == 1);
    CHECK(m.mape_pct == doctest::Approx(0.0));
    const ErrorMetrics empty = error_metrics({});
    CHECK(empty.n_used == 0);
    CHECK(empty.mape_pct == 0.0);
}

TEST_CASE("metric invariants hold on random data") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 200; ++i) {
        double e = u(rng);
        if (e == 0.0) e = 1.0;
        pairs.emplace_back(u(rng), e);
    }
    const ErrorMetrics m = error_metrics(pairs);
    // Triangle inequality: mean |x| bounds |mean x|.
    CHECK(m.mape_pct >= std::fabs(m.msre_pct) - 1e-9);

    // Permutation changes nothing beyond summation round-off.
    std::vector<std::pair<double, double>> shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const ErrorMetrics ms = error_metrics(shuffled);
    CHECK(ms.mape_pct == doctest::Approx(m.mape_pct).epsilon(1e-12));
    CHECK(ms.msre_pct == doctest::Approx(m.msre_pct).epsilon(1e-12));

    // Flipping both signs of a pair leaves every metric unchanged.
    std::vector<std::pair<double, double>> flipped = pairs;
    for (auto& [t, e] : flipped) {
        t = -t;
        e = -e;
    }
    const ErrorMetrics mf = error_metrics(flipped);
    CHECK(mf.mape_pct == doctest::Approx(m.mape_pct).epsilon(1e-13));
    CHECK(mf.msre_pct == doctest::Approx(m.msre_pct).epsilon(1e-13));
}

TEST_CASE("sign flips count strict sign disagreements") {
    CHECK(count_sign_flips({{1, -1}, {-2, -3}, {0, 5}, {2, 3}, {-4, 1}}) == 2);
    CHECK(count_sign_flips({}) == 0);
}

TEST_CASE("value matching uses magnitudes inside the margin") {
    const auto theory = demo_theory();

    SUBCASE("margin formula k * (unc + tol * |value|)") {
        // value 10, unc 0.1: margin = 3 * (0.1 + 0.2) = 0.9. Sites 0 (10.8),
        // 1 (-10.2) and 2 (9.8) fit; site 3 (50) does not.
        const ExperimentalRecord r{"r1", Quantity::A_zz, 10.0, 0.1, std::nullopt,
                                   DatasetTag::user};
        const auto res = position_spins({r}, theory);
        REQUIRE(res.size() == 1);
        CHECK(res[0].matched);
        REQUIRE(res[0].candidates.size() == 3);
        // 10.2 and 9.8 have equal residuals (0.2): tie, broken by distance,
        // so site 2 (1.5 A) leads site 1 (3.0 A).
        CHECK(res[0].tie);
        CHECK(res[0].candidates[0].site_index == 2);
        CHECK(res[0].candidates[1].site_index == 1);
        CHECK(res[0].candidates[2].site_index == 0);
        // Signed theory value survives in the candidate.
        CHECK(res[0].candidates[1].theory_mhz == -10.2);
    }

    SUBCASE("zero uncertainty still leaves the relative margin") {
        const ExperimentalRecord r{"r2", Quantity::A_zz, 49.0, 0.0, std::nullopt,
                                   DatasetTag::user};
        const auto res = position_spins({r}, theory);
        REQUIRE(res[0].matched);
        CHECK(!res[0].tie);
        CHECK(res[0].candidates.size() == 1);
        CHECK(res[0].candidates[0].site_index == 3);
        CHECK(res[0].candidates[0].residual_mhz == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("no candidate inside the margin is unmatched, not an error") {
        const ExperimentalRecord r{"r3", Quantity::A_zz, 30.0, 0.01, std::nullopt,
                                   DatasetTag::user};
        const auto res = position_spins({r}, theory);
        CHECK(!res[0].matched);
        CHECK(res[0].candidates.empty());
        CHECK(!res[0].tie);
        CHECK(!res[0].position_mismatch);
    }

    SUBCASE("theory order does not change the outcome") {
        const ExperimentalRecord r{"r1", Quantity::A_zz, 10.0, 0.1, std::nullopt,
                                   DatasetTag::user};
        auto reversed = theory;
        std::reverse(reversed.begin(), reversed.end());
        const auto a = position_spins({r}, theory);
        const auto b = position_spins({r}, reversed);
        REQUIRE(a[0].candidates.size() == b[0].candidates.size());
        for (size_t i = 0; i < a[0].candidates.size(); ++i)
            CHECK(a[0].candidates[i].site_index == b[0].candidates[i].site_index);
    }
}

TEST_CASE("positioned records bind geometrically") {
    const auto theory = demo_theory();

    SUBCASE("nearest site within the radius wins regardless of value") {
        const ExperimentalRecord r{"p1", Quantity::A_zz, 2.0, 0.1,
                                   Vec3(0.05, 0.0, 3.1), DatasetTag::user};
        const auto res = position_spins({r}, theory);
        REQUIRE(res[0].matched);
        REQUIRE(res[0].candidates.size() == 1);
        CHECK(res[0].candidates[0].site_index == 2);
        CHECK(res[0].candidates[0].residual_mhz == doctest::Approx(7.8).epsilon(1e-12));
    }

    SUBCASE("no site within the radius is a position mismatch") {
        const ExperimentalRecord r{"p2", Quantity::A_zz, 9.8, 0.1,
                                   Vec3(10, 10, 10), DatasetTag::user};
        const auto res = position_spins({r}, theory);
        CHECK(!res[0].matched);
        CHECK(res[0].position_mismatch);
        CHECK(res[0].candidates.empty());
    }

    SUBCASE("a widened radius turns the mismatch into a match") {
        const ExperimentalRecord r{"p3", Quantity::A_zz, 9.8, 0.1,
                                   Vec3(4.4, 0.0, 0.0), DatasetTag::user};
        MatchParams p;
        p.position_radius = 0.3;
        CHECK(position_spins({r}, theory, p)[0].position_mismatch);
        p.position_radius = 0.5;
        const auto res = position_spins({r}, theory, p);
        CHECK(res[0].matched);
        CHECK(res[0].candidates[0].site_index == 3);
    }
}

TEST_CASE("results come back ordered by record id") {
    const auto theory = demo_theory();
    std::vector<ExperimentalRecord> recs = {
        {"zeta", Quantity::A_zz, 10.0, 0.1, std::nullopt, DatasetTag::user},
        {"alpha", Quantity::A_zz, 49.0, 0.0, std::nullopt, DatasetTag::user},
        {"mid", Quantity::A_zz, 30.0, 0.0, std::nullopt, DatasetTag::user},
    };
    const auto res = position_spins(recs, theory);
    REQUIRE(res.size() == 3);
    CHECK(res[0].record_id == "alpha");
    CHECK(res[1].record_id == "mid");
    CHECK(res[2].record_id == "zeta");
}
