#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "lifecurve/validate.hpp"

using namespace lifecurve;
using testing_helpers::logistic_order_process;
using testing_helpers::make_series;

namespace {

const MonthIndex kEpoch = make_month(2000, 1);

Lifepath path_with_leave(std::string id, MonthIndex last_active) {
    Lifepath p;
    p.entity_id = std::move(id);
    p.last_activity_month = last_active;
    p.data_end_month = make_month(2017, 9);
    return p;
}

}  // namespace

TEST_CASE("cohort selection by last activity year") {
    std::vector<Lifepath> paths{path_with_leave("A", make_month(2009, 7)),
                                path_with_leave("B", make_month(2011, 2)),
                                path_with_leave("C", make_month(2009, 1))};
    auto cohort = select_cohort(paths, 2009);
    REQUIRE(cohort.size() == 2);
    CHECK(cohort[0].entity_id == "A");
    CHECK(cohort[1].entity_id == "C");
    CHECK_THROWS_AS(select_cohort(paths, 1995), Error);
}

TEST_CASE("entity active again after the leave year is excluded") {
    // activity in 2009 and 2011: last_activity_month is in 2011
    std::vector<Lifepath> paths{path_with_leave("A", make_month(2011, 3))};
    CHECK_THROWS_AS(select_cohort(paths, 2009), Error);
}

TEST_CASE("planted leave years are selected exactly") {
    RandomStream rng(5);
    std::vector<Lifepath> paths;
    std::vector<int> truth;
    for (int i = 0; i < 50; ++i) {
        auto entity = logistic_order_process(
            "E" + std::to_string(i), make_month(2004, 1) + rng.uniform(0, 48),
            rng.uniform(0.3, 1.0), 20 + static_cast<std::int64_t>(rng.next_u64() % 60),
            kEpoch, make_month(2014, 12), rng);
        truth.push_back(month_year(entity.last_active_month()));
        Lifepath p;
        p.entity_id = entity.entity_id;
        p.last_activity_month = entity.last_active_month();
        p.data_end_month = entity.end_month();
        paths.push_back(std::move(p));
    }
    for (int year = 2004; year <= 2014; ++year) {
        std::size_t expected = 0;
        for (int t : truth)
            if (t == year) ++expected;
        if (expected == 0) continue;
        CHECK(select_cohort(paths, year).size() == expected);
    }
}

TEST_CASE("perfect predictions score perfectly") {
    auto path = path_with_leave("A", make_month(2009, 6));
    LifepathPoint pt;
    pt.analysis_year = 2009;
    pt.expected_leave = month_to_years(make_month(2009, 6) + 0.5);
    path.points.push_back(pt);
    auto report = score_cohort({path}, 2009);
    const auto& s = report.per_year.at(2009);
    CHECK(s.within_1yr == 1.0);
    CHECK(s.within_2yr == 1.0);
    CHECK(std::abs(s.mean_error) < 0.1);
    CHECK(s.variance == 0.0);
}

TEST_CASE("a prediction 1.5 years early passes only the 2-year gate") {
    auto path = path_with_leave("A", make_month(2009, 6));
    double actual = month_to_years(make_month(2009, 6) + 0.5);
    LifepathPoint pt;
    pt.analysis_year = 2008;
    pt.expected_leave = actual - 1.5;
    path.points.push_back(pt);
    auto report = score_cohort({path}, 2009);
    const auto& s = report.per_year.at(2008);
    CHECK(s.within_1yr == 0.0);
    CHECK(s.within_2yr == 1.0);
}

TEST_CASE("scoring is invariant under cohort permutation") {
    std::vector<Lifepath> cohort;
    RandomStream rng(9);
    for (int i = 0; i < 10; ++i) {
        auto p = path_with_leave("E" + std::to_string(i),
                                 make_month(2009, 1 + static_cast<int>(rng.next_u64() % 12)));
        LifepathPoint pt;
        pt.analysis_year = 2008;
        pt.expected_leave = 2009.0 + rng.uniform(-1.5, 1.5);
        p.points.push_back(pt);
        cohort.push_back(std::move(p));
    }
    auto a = score_cohort(cohort, 2009);
    std::reverse(cohort.begin(), cohort.end());
    auto b = score_cohort(cohort, 2009);
    CHECK(a.per_year.at(2008).mean_error == b.per_year.at(2008).mean_error);
    CHECK(a.per_year.at(2008).within_1yr == b.per_year.at(2008).within_1yr);
    CHECK(a.per_year.at(2008).variance == b.per_year.at(2008).variance);
}

TEST_CASE("synthetic cohort end-to-end accuracy") {
    // entities planted to leave in 2009; lifepaths computed per year
    RandomStream rng(123);
    const int leave_year = 2009;
    std::vector<Lifepath> cohort;
    int made = 0;
    while (made < 120) {
        auto entity = logistic_order_process(
            "E" + std::to_string(made), make_month(2006, 1) + rng.uniform(0, 24),
            rng.uniform(0.25, 0.8), 30 + static_cast<std::int64_t>(rng.next_u64() % 120),
            kEpoch, make_month(2012, 12), rng);
        if (month_year(entity.last_active_month()) != leave_year) continue;
        std::vector<int> years;
        for (int y = 2005; y <= 2011; ++y) years.push_back(y);
        cohort.push_back(expanding_window_fits(entity, years, kEpoch));
        ++made;
    }
    auto report = score_cohort(cohort, leave_year);
    const auto& final_year = report.per_year.at(leave_year);
    CHECK(final_year.within_1yr >= 0.8);
    for (const auto& [year, s] : report.per_year) {
        REQUIRE(s.within_2yr >= s.within_1yr);
        REQUIRE(s.within_1yr >= 0.0);
        REQUIRE(s.within_2yr <= 1.0);
    }
    // |mean error| shrinks over the last three analysis years
    double e07 = std::abs(report.per_year.at(2007).mean_error);
    double e08 = std::abs(report.per_year.at(2008).mean_error);
    double e09 = std::abs(report.per_year.at(2009).mean_error);
    CHECK(e08 <= e07 + 1e-9);
    CHECK(e09 <= e08 + 1e-9);
}

TEST_CASE("frozen portion keeps expected leave constant within 0.1 year") {
    RandomStream rng(55);
    auto entity = logistic_order_process("F", make_month(2005, 5) + 0.2, 0.6, 70,
                                         kEpoch, make_month(2013, 12), rng);
    int leave_year = month_year(entity.last_active_month());
    std::vector<int> years;
    for (int y = leave_year + 1; y <= 2013; ++y) years.push_back(y);
    auto path = expanding_window_fits(entity, years, kEpoch);
    REQUIRE(path.points.size() >= 2);
    REQUIRE(path.points.front().expected_leave);
    double first = *path.points.front().expected_leave;
    for (const auto& p : path.points) {
        REQUIRE(p.expected_leave);
        REQUIRE(std::abs(*p.expected_leave - first) < 0.1);
    }
}
