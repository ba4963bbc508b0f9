#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ctlstop/ctlstop.hpp"
#include "ctlstop/io.hpp"
#include "ctlstop/run_config.hpp"

using namespace ctlstop;

TEST(Intervals, NormalizeMergesOverlapsAndTouchingClosedEnds) {
    IntervalSet s = {{2, 3, true, true}, {0, 1, true, false}, {1, 2, true, true}, {5, 6, false, false}};
    const auto n = normalize(s);
    ASSERT_EQ(n.size(), 2u);
    EXPECT_EQ(n[0].lo, 0.0);
    EXPECT_EQ(n[0].hi, 3.0);
    EXPECT_TRUE(n[0].hi_closed);
    EXPECT_EQ(n[1].lo, 5.0);
}

TEST(Intervals, OpenEndsMeetingAtAPointStaySeparate) {
    const auto n = normalize({{0, 1, true, false}, {1, 2, false, true}});
    EXPECT_EQ(n.size(), 2u);
    EXPECT_FALSE(contains(n, 1.0));
}

TEST(Intervals, NormalizeKeepsClosedEndOfContainedInterval) {
    const auto n = normalize({{0, 2, true, false}, {1, 2, true, true}});
    ASSERT_EQ(n.size(), 1u);
    EXPECT_TRUE(n[0].hi_closed);
}

TEST(Intervals, MirrorHalfLine) {
    const auto m = mirror_half_line({{0, 1, false, true}, {3, kInf, true, false}});
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m[0].lo, -kInf);
    EXPECT_EQ(m[0].hi, -3.0);
    EXPECT_EQ(m[1].lo, -1.0);
    EXPECT_EQ(m[1].hi, 1.0);
    EXPECT_TRUE(contains(m, 0.0));
}

TEST(Intervals, SubsetAndSameSets) {
    const IntervalSet a = {{1, 2}, {4, 5}};
    const IntervalSet b = {{0, 3}, {3.5, kInf, true, false}};
    EXPECT_TRUE(subset_of(a, b, 0.0));
    EXPECT_FALSE(subset_of(b, a, 0.0));
    EXPECT_TRUE(same_sets(a, {{1 + 1e-12, 2}, {4, 5 - 1e-12}}, 1e-9));
    EXPECT_FALSE(same_sets(a, {{1, 2}}, 1e-9));
}

// Random interval lists: normalize is idempotent, sorted, disjoint, and preserves membership.
TEST(IntervalsProperty, NormalizePreservesMembership) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(-5, 5);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 500; ++trial) {
        IntervalSet s;
        const int k = 1 + trial % 6;
        for (int i = 0; i < k; ++i) {
            double a = std::round(pos(rng) * 4) / 4, b = std::round(pos(rng) * 4) / 4;
            if (a > b) std::swap(a, b);
            s.push_back({a, b, coin(rng), coin(rng)});
        }
        const auto n = normalize(s);
        EXPECT_EQ(normalize(n), n);
        for (std::size_t i = 1; i < n.size(); ++i) EXPECT_LE(n[i - 1].hi, n[i].lo);
        for (double x = -5.5; x <= 5.5; x += 0.125) {
            bool in = false;
            for (const auto& i : s)
                if (!(i.lo == i.hi && !(i.lo_closed && i.hi_closed))) in = in || i.contains(x);
            EXPECT_EQ(in, contains(n, x)) << "x=" << x << " trial " << trial;
        }
    }
}

// Piece derivatives against central differences.
TEST(PieceProperty, DerivativesMatchDifferences) {
    const std::vector<Piece> pieces = {
        Piece::quadratic(0, 1, -1.5, 1.5),  Piece::cosh_quadratic(0, 2, -0.3, 1.4, 1.0, 1.0),
        Piece::affine_abs(0, 3, -1.0, 2.0), Piece::exponential(0, kInf, 2.0, 1.0),
        Piece::constant(0, 1, 0.7)};
    for (const auto& p : pieces) {
        for (double x = 0.1; x < 1.0; x += 0.1) {
            const double h = 1e-5;
            EXPECT_NEAR(p.d1(x), (p.value(x + h) - p.value(x - h)) / (2 * h), 1e-8) << to_string(p.form);
            EXPECT_NEAR(p.d2(x), (p.d1(x + h) - p.d1(x - h)) / (2 * h), 1e-7) << to_string(p.form);
        }
    }
}

TEST(Generator, MirrorSymmetryAndOneSidedSlopes) {
    Generator g;
    g.pieces = {Piece::quadratic(0, 0.5, 1.0, 0.0), Piece::affine_abs(0.5, kInf, 1.0, -0.25)};
    g.validate();
    for (double x : {0.1, 0.4, 0.7, 3.0}) {
        EXPECT_EQ(eval_u(g, x), eval_u(g, -x));
        EXPECT_DOUBLE_EQ(eval_du(g, x, Side::Right), -eval_du(g, -x, Side::Left));
    }
    EXPECT_DOUBLE_EQ(eval_du(g, 0.5, Side::Left), 1.0);
    EXPECT_DOUBLE_EQ(eval_du(g, 0.5, Side::Right), 1.0);
    EXPECT_DOUBLE_EQ(eval_du(g, -0.5, Side::Left), -1.0);
}

TEST(Generator, ValidateRejectsGapsAndBoundedTail) {
    Generator g;
    g.pieces = {Piece::constant(0, 1, 0), Piece::constant(1.5, kInf, 0)};
    EXPECT_THROW(g.validate(), Error);
    g.pieces = {Piece::constant(0, 1, 0)};
    EXPECT_THROW(g.validate(), Error);
    g.pieces = {};
    EXPECT_THROW(g.validate(), Error);
}

TEST(Roots, FindsKnownRootsToTheUlp) {
    const auto r = find_root([](double x) { return std::make_pair(x * x - 2.0, 2.0 * x); }, 0.0, 2.0);
    EXPECT_NEAR(r.x, std::sqrt(2.0), 4e-16);
    const auto c = find_root([](double x) { return std::make_pair(std::cos(x) - x, -std::sin(x) - 1.0); }, 0.0, 1.0);
    EXPECT_NEAR(c.x, 0.73908513321516064, 2e-16);
    EXPECT_LE(std::abs(c.residual), 2e-16);
}

TEST(Roots, NoSignChangeIsABracketFailure) {
    try {
        find_root([](double x) { return std::make_pair(x * x + 1.0, 2.0 * x); }, -1.0, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::BracketFailure);
    }
}

TEST(Model, PayoffsAndValidation) {
    const auto k = make_kink_model(0.5, 2.0);
    EXPECT_DOUBLE_EQ(k.g(0.5), 1.5);
    EXPECT_DOUBLE_EQ(k.g(1.5), 0.0);
    EXPECT_DOUBLE_EQ(k.g.d1(1.0, Side::Left), -4.0);
    EXPECT_DOUBLE_EQ(k.g.d1(1.0, Side::Right), 0.0);
    EXPECT_EQ(k.g.kinks().size(), 2u);
    const auto q = make_quadratic_model(1, 2, 3, 4);
    EXPECT_DOUBLE_EQ(q.h(1.0), 6.0);
    EXPECT_DOUBLE_EQ(q.generator_op(1.0, 2.0, 3.0, 4.0), 2.0 + 0.0 - 2.0);
    EXPECT_THROW(make_kink_model(-1.0, 1.0), Error);
    EXPECT_THROW(make_quadratic_model(1, -1, 1, 0), Error);
}

TEST(RegionExtraction, CaseOneQuadraticRegions) {
    const auto r = classify_regime_I({1, 1, 0.5, 0});
    const auto rs = extract_regions(r.generator, make_quadratic_model(1, 1, 0.5, 0));
    ASSERT_EQ(rs.waiting.size(), 1u);
    EXPECT_NEAR(rs.waiting[0].hi, r.beta, 1e-9);
    EXPECT_TRUE(rs.stop_wait.empty());
    ASSERT_EQ(rs.stop_control.size(), 2u);
    EXPECT_NEAR(rs.stop_control[1].lo, r.alpha, 1e-9);
    ASSERT_EQ(rs.boundary_tags.size(), 2u);
    EXPECT_EQ(rs.boundary_tags[0].kind, BoundaryKind::Reflecting);
}

TEST(RegionExtraction, BuildVIsMaxOfUAndG) {
    for (double lam : {1.0, 1.5, 10.0}) {
        const KinkParams p{0.5, lam};
        const auto r = classify_regime_II(p);
        const auto m = p.model();
        const auto v = build_v(r.generator, m);
        for (double x = -3; x <= 3; x += 0.01)
            EXPECT_NEAR(v(x), std::max(eval_u(r.generator, x), m.g(x)), 1e-12) << lam << " " << x;
    }
}

TEST(RunConfig, ParsesSectionsAndRejectsUnknownKeys) {
    std::istringstream in(
        "subcommand = solve\n[model]\ncase = kink # comment\ndelta = 0.5\nlambda=1\n[numeric]\ndt = 1e-3\n"
        "[output]\nformat = json\n");
    const auto c = RunConfig::parse(in);
    EXPECT_EQ(c.text("run.subcommand"), "solve");
    EXPECT_EQ(c.text("model.case"), "kink");
    EXPECT_DOUBLE_EQ(*c.real("model.delta"), 0.5);
    EXPECT_DOUBLE_EQ(c.real("numeric.dt", 0.0), 1e-3);
    EXPECT_EQ(c.text("output.format"), "json");

    std::istringstream bad_key("[model]\ngamma = 1\n");
    EXPECT_THROW(RunConfig::parse(bad_key), Error);
    std::istringstream bad_section("[solver]\n");
    EXPECT_THROW(RunConfig::parse(bad_section), Error);
    for (const char* v : {"nan", "inf", "1e999", "abc", "1.0x", ""}) {
        std::istringstream bad_value(std::string("[model]\ndelta = ") + v + "\n");
        EXPECT_THROW(RunConfig::parse(bad_value), Error) << v;
    }
}

TEST(RunConfig, OverridesReplaceOnlyGivenKeys) {
    std::istringstream in("[model]\ndelta = 0.5\nlambda = 1\n");
    auto c = RunConfig::parse(in);
    RunConfig flags;
    flags.set("model", "lambda", 2.0);
    c.override_with(flags);
    EXPECT_DOUBLE_EQ(*c.real("model.delta"), 0.5);
    EXPECT_DOUBLE_EQ(*c.real("model.lambda"), 2.0);
}

TEST(Io, ShortestRoundTripFormatting) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double x = d(rng);
        EXPECT_EQ(std::stod(io::fmt(x)), x);
    }
    EXPECT_EQ(io::fmt(0.1), "0.1");
    EXPECT_EQ(io::fmt(kInf), "inf");
}

TEST(Io, GeneratorJsonRoundTrip) {
    std::vector<io::GeneratorDoc> docs;
    for (double lam : {1.0, 1.5, 10.0}) {
        const KinkParams p{0.5, lam};
        docs.push_back(io::make_doc(classify_regime_II(p), p));
    }
    for (const QuadParams& p : {QuadParams{1, 1, 0.5, 0}, QuadParams{4, 0.1, 1, 0}, QuadParams{1, 1, 5, 0}})
        docs.push_back(io::make_doc(classify_regime_I(p), p));
    for (const auto& d : docs) {
        const auto back = io::generator_doc_from_json(io::json::parse(io::to_json(d).dump()));
        EXPECT_EQ(back.regime, d.regime);
        ASSERT_EQ(back.generator.pieces.size(), d.generator.pieces.size());
        for (double x = -5; x <= 5; x += 0.0137)
            EXPECT_NEAR(eval_u(back.generator, x), eval_u(d.generator, x), 1e-12);
        EXPECT_EQ(back.model.g(0.3), d.model.g(0.3));
        ASSERT_TRUE(back.generator.declared);
        EXPECT_TRUE(same_sets(back.generator.declared->control, d.generator.declared->control, 0.0));
    }
}
