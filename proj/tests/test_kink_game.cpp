#include <cmath>

#include <gtest/gtest.h>

#include "ctlstop/kink_game.hpp"
#include "ctlstop/vi_verifier.hpp"

using namespace ctlstop;

namespace {

// u on the stopping stretch of the truncated parabola and its decaying continuation,
// matched by value and slope at alpha: lambda (1 - a^2) w = 2 lambda a, so
// a^2 + (2/w) a - 1 = 0.
double oracle_alpha_never_control(double delta) {
    const double w = std::sqrt(2 * delta);
    return -1.0 / w + std::sqrt(1.0 / (w * w) + 1.0);
}

// In a jump regime u has slope -1 up to alpha and A e^{-w x} beyond; C^1 at alpha
// forces u(alpha) = 1/w, and u(alpha) = g(alpha) gives lambda (1 - alpha^2) = 1/w.
double oracle_alpha_jump(double delta, double lambda) {
    const double w = std::sqrt(2 * delta);
    return std::sqrt(1.0 - 1.0 / (lambda * w));
}

}  // namespace

TEST(KinkFrozen, CaseAAlphaIsSqrtTwoMinusOne) {
    const auto r = classify_regime_II({0.5, 1.0});
    EXPECT_EQ(r.tag, KinkCase::CaseA_NeverControl);
    EXPECT_NEAR(r.alpha, std::sqrt(2.0) - 1.0, 1e-15);
    EXPECT_LT(r.residual, 1e-12);
    EXPECT_FALSE(r.beta.has_value());
    // A = lambda (1 - alpha^2) e^{alpha}
    EXPECT_NEAR(r.coeff_A, (1 - r.alpha * r.alpha) * std::exp(r.alpha), 1e-15);
    // u(1.0) = A e^{-1}
    EXPECT_NEAR(eval_u(r.generator, 1.0), 0.46115879200720347, 1e-14);
}

TEST(KinkFrozen, Thresholds) {
    EXPECT_NEAR(kink::lambda_star_1(0.5), 1.2071067811865475, 1e-15);  // (1 + sqrt 2)/2
    EXPECT_NEAR(kink::lambda_star_2(0.5), 1.6180339887498949, 1e-15);  // golden ratio
    for (double d : {0.1, 0.5, 2.0, 10.0}) {
        // lambda*_2 is the positive root of l^2 - l/sqrt(2 delta) - 1 = 0
        const double l2 = kink::lambda_star_2(d);
        EXPECT_NEAR(l2 * l2 - l2 / std::sqrt(2 * d) - 1.0, 0.0, 1e-13);
        EXPECT_LT(kink::lambda_star_1(d), l2);
    }
}

TEST(KinkFrozen, CaseBReference) {
    const auto r = classify_regime_II({0.5, 1.5});
    EXPECT_EQ(r.tag, KinkCase::CaseB_JumpFromBeta);
    EXPECT_NEAR(r.alpha, 1.0 / std::sqrt(3.0), 1e-15);
    ASSERT_TRUE(r.beta);
    EXPECT_NEAR(*r.beta, 0.089316397477040857, 1e-15);
    // beta: lambda(1 - beta^2) = u(beta) = c - beta on the slope -1 stretch
    const double c = -1.5 * r.alpha * r.alpha + r.alpha + 1.5;
    EXPECT_NEAR(1.5 * (1 - *r.beta * *r.beta), c - *r.beta, 1e-14);
    EXPECT_LT(r.residual, 1e-12);
}

TEST(KinkFrozen, CaseCReferences) {
    for (double lam : {5.0, 10.0}) {
        const auto r = classify_regime_II({0.5, lam});
        EXPECT_EQ(r.tag, KinkCase::CaseC_JumpFromZero) << lam;
        EXPECT_NEAR(r.alpha, oracle_alpha_jump(0.5, lam), 1e-15);
        EXPECT_LT(r.residual, 1e-12);
        // kink at 0: slopes -1 on the right, +1 on the left
        EXPECT_DOUBLE_EQ(eval_du(r.generator, 0.0, Side::Right), -1.0);
        EXPECT_DOUBLE_EQ(eval_du(r.generator, 0.0, Side::Left), 1.0);
        EXPECT_LT(eval_u(r.generator, 0.0), lam);
    }
    EXPECT_NEAR(classify_regime_II({0.5, 10.0}).alpha, 0.94868329805051377, 1e-15);
}

TEST(KinkBoundaries, PlacementAtThresholds) {
    for (double d : {0.1, 0.5, 3.0}) {
        const double l1 = kink::lambda_star_1(d), l2 = kink::lambda_star_2(d);
        EXPECT_EQ(classify_regime_II({d, l1}).tag, KinkCase::CaseA_NeverControl);
        EXPECT_EQ(classify_regime_II({d, std::nextafter(l1, 10.0)}).tag, KinkCase::CaseB_JumpFromBeta);
        EXPECT_EQ(classify_regime_II({d, l2}).tag, KinkCase::CaseB_JumpFromBeta);
        EXPECT_EQ(classify_regime_II({d, std::nextafter(l2, 10.0)}).tag, KinkCase::CaseC_JumpFromZero);
    }
}

TEST(KinkBoundaries, BetaShrinksToZeroAtTheUpperThreshold) {
    const double l2 = kink::lambda_star_2(0.5);
    const auto r = classify_regime_II({0.5, l2});
    ASSERT_TRUE(r.beta);
    EXPECT_LT(*r.beta, 1e-7);
    const auto below = classify_regime_II({0.5, kink::lambda_star_1(0.5) + 1e-9});
    EXPECT_NEAR(*below.beta, below.alpha, 1e-3);
}

TEST(KinkProperty, SweepPartitionsTheLambdaAxis) {
    for (double d : {0.2, 0.5, 1.0, 4.0}) {
        const double l1 = kink::lambda_star_1(d), l2 = kink::lambda_star_2(d);
        for (int i = 0; i < 1000; ++i) {
            const double lam = 0.1 + (20.0 - 0.1) * i / 999.0;
            const auto r = classify_regime_II({d, lam});
            const KinkCase want = lam <= l1   ? KinkCase::CaseA_NeverControl
                                  : lam <= l2 ? KinkCase::CaseB_JumpFromBeta
                                              : KinkCase::CaseC_JumpFromZero;
            ASSERT_EQ(r.tag, want) << d << " " << lam;
            ASSERT_LT(r.residual, 1e-12);
            if (want == KinkCase::CaseA_NeverControl) ASSERT_NEAR(r.alpha, oracle_alpha_never_control(d), 1e-14);
            else ASSERT_NEAR(r.alpha, oracle_alpha_jump(d, lam), 1e-14);
            if (r.beta) {
                ASSERT_GE(*r.beta, 0.0);
                ASSERT_LT(*r.beta, r.alpha);
            }
        }
    }
}

TEST(KinkProperty, GeneratorsPassVerificationAcrossRegimes) {
    for (double lam : {0.3, 1.0, 1.2, 1.3, 1.5, 1.6, 1.7, 3.0, 10.0, 50.0}) {
        const KinkParams p{0.5, lam};
        const auto r = classify_regime_II(p);
        const auto rep = verify(r.generator, p.model(), 1e-3, 4.0);
        EXPECT_TRUE(rep.verdict) << lam;
    }
}

TEST(KinkErrors, RangeAndValidity) {
    EXPECT_THROW(classify_regime_II({0.0, 1.0}), Error);
    EXPECT_THROW(classify_regime_II({0.5, -1.0}), Error);
    try {
        classify_regime_II({1e-14, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::OutOfSupportedRange);
    }
}
