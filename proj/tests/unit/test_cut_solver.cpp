#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "polyfilter/errors.hpp"
#include "polyfilter/sigma_points.hpp"
#include "test_util.hpp"

using namespace polyfilter;

TEST_CASE("candidate family lists") {
    for (int c : {4, 6, 8})
        for (int n = 1; n <= 12; ++n) {
            const auto cands = cut_family_candidates(n, c);
            REQUIRE_FALSE(cands.empty());
            for (const auto& list : cands) {
                CHECK(list.front() == FamilyKind::Axis);
                for (FamilyKind k : list) CHECK(family_size(k, n) > 0);
            }
        }
    CHECK_THROWS_AS(cut_family_candidates(3, 7), UnsupportedOrder);
    CHECK_THROWS_AS(cut_family_candidates(0, 4), InvalidArgument);
}

TEST_CASE("moment residual detects a perturbed rule") {
    CutRule r = cut_rule(3, 4);
    CHECK(cut_moment_residual(r) <= 1e-9);
    r.families.front().radius *= 1.01;
    CHECK(cut_moment_residual(r) > 1e-6);
    r = cut_rule(3, 4);
    r.center_weight += 1e-3;
    CHECK(cut_moment_residual(r) == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("residual agrees with direct moment evaluation") {
    for (int c : {4, 6, 8})
        for (int n = 1; n <= 4; ++n) {
            CutRule r = cut_rule(n, c);
            r.families.back().weight *= 1.05;
            const SigmaSet s = rule_points(r);
            double worst = 0.0;
            testutil::for_each_monomial(n, c, [&](const std::vector<int>& e, int total) {
                if (total % 2 == 0)
                    worst = std::max(worst, std::abs(raw_moment(s, e) - testutil::std_gaussian_moment(e)));
            });
            CHECK(cut_moment_residual(r) == doctest::Approx(worst).epsilon(1e-8));
        }
}

TEST_CASE("solver produces admissible rules") {
    for (int c : {4, 6, 8})
        for (int n = 1; n <= 3; ++n) {
            const auto rule = solve_cut_rule(n, c);
            REQUIRE(rule.has_value());
            CHECK(rule->dim == n);
            CHECK(rule->order == c);
            CHECK(rule->residual <= 1e-9);
            CHECK(cut_moment_residual(*rule) <= 1e-9);
            for (const CutFamily& f : rule->families) {
                CHECK(f.radius > 0.0);
                CHECK(std::isfinite(f.weight));
            }
        }
    // same options, same answer
    const auto a = solve_cut_rule(3, 6);
    const auto b = solve_cut_rule(3, 6);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(format_cut_table({*a}) == format_cut_table({*b}));
}

TEST_CASE("rule_points layout") {
    const CutRule& r = cut_rule(2, 4);
    const SigmaSet s = rule_points(r);
    CHECK(s.size() == r.point_count());
    CHECK(s.points.col(0).isZero(0.0));
    CHECK(s.w_mean(0) == r.center_weight);
    // adjacent conjugate pairs
    for (int i = 1; i + 1 < s.size(); i += 2) {
        CHECK(s.points.col(i) == -s.points.col(i + 1));
        CHECK(s.w_mean(i) == s.w_mean(i + 1));
    }
}

TEST_CASE("table text round-trips bit-exactly") {
    std::vector<CutRule> rules;
    for (int c : {4, 6, 8})
        for (int n = 1; n <= 6; ++n) rules.push_back(cut_rule(n, c));
    const std::string text = format_cut_table(rules);
    const std::vector<CutRule> back = parse_cut_table(text);
    REQUIRE(back.size() == rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) {
        CHECK(back[i].dim == rules[i].dim);
        CHECK(back[i].order == rules[i].order);
        CHECK(back[i].center_weight == rules[i].center_weight);
        CHECK(back[i].residual == rules[i].residual);
        REQUIRE(back[i].families.size() == rules[i].families.size());
        for (std::size_t f = 0; f < rules[i].families.size(); ++f) {
            CHECK(back[i].families[f].kind == rules[i].families[f].kind);
            CHECK(back[i].families[f].radius == rules[i].families[f].radius);
            CHECK(back[i].families[f].radius2 == rules[i].families[f].radius2);
            CHECK(back[i].families[f].weight == rules[i].families[f].weight);
        }
    }
    CHECK(format_cut_table(back) == text);

    const std::string path = "test_cut_roundtrip.txt";
    save_cut_table(path, rules);
    CHECK(format_cut_table(load_cut_table(path)) == text);
    std::remove(path.c_str());
}

TEST_CASE("shipped table loads and validates") {
    const std::vector<CutRule> shipped = load_cut_table(default_cut_table_path());
    CHECK(shipped.size() == 36);
    for (const CutRule& r : shipped) CHECK(cut_moment_residual(r) <= 1e-9);
}

TEST_CASE("malformed tables are rejected") {
    CHECK_THROWS_AS(parse_cut_table(""), IoError);
    CHECK_THROWS_AS(parse_cut_table("not-a-table 1\n"), IoError);
    const std::string good = format_cut_table({cut_rule(1, 4)});
    const std::string truncated = good.substr(0, good.rfind("family"));
    CHECK_THROWS_AS(parse_cut_table(truncated), IoError);
    CHECK_THROWS_AS(load_cut_table("/nonexistent/cut_rules.txt"), IoError);
    CHECK_THROWS_AS(family_from_string("Hexagon"), InvalidArgument);
    CHECK(family_from_string(to_string(FamilyKind::Diag3)) == FamilyKind::Diag3);
}
