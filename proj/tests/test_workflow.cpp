#include <sstream>

#include <gtest/gtest.h>

#include "dtact/workflow.hpp"
#include "support.hpp"

using namespace dtact;
using namespace dtact::workflow;

TEST(DrawPresses, FollowsProtocol)
{
    const PressProtocol p;
    sim::Rng rng(1);
    const PressSet set = draw_presses(p, 2.0, rng);
    EXPECT_EQ(set.calibration.ball_radius, 4.0);
    EXPECT_EQ(set.calibration.d_max, 1.8);
    EXPECT_LE(std::abs(set.calibration.center.x), 0.7);
    EXPECT_LE(std::abs(set.calibration.center.y), 0.7);
    ASSERT_EQ(set.regression.size(), 30u);
    ASSERT_EQ(set.test.size(), 20u);
    for (const auto& t : set.test) {
        EXPECT_EQ(t.ball_radius, 5.0);
        EXPECT_GE(t.d_max, 0.4);
        EXPECT_LE(t.d_max, 1.5);
        EXPECT_LE(std::abs(t.center.x), 7.0);
    }
    for (const auto& r : set.regression) {
        EXPECT_EQ(r.ball_radius, 4.0);
        EXPECT_LE(std::abs(r.center.y), 8.0);
    }
}

TEST(DrawPresses, DepthsCappedByThickness)
{
    sim::Rng rng(2);
    const PressSet set = draw_presses(PressProtocol{}, 1.0, rng);
    EXPECT_EQ(set.calibration.d_max, 1.0);
    for (const auto& r : set.regression)
        EXPECT_LE(r.d_max, 1.0);
}

TEST(RegressionCenter, PerScheme)
{
    EXPECT_EQ(regression_center(sim::Scheme::Standard, 580), Eigen::Vector2d(290, 290));
    EXPECT_EQ(regression_center(sim::Scheme::Scheme4, 580), Eigen::Vector2d(579, 0));
}

TEST(CalibrateRegression, FrameIndexInErrors)
{
    const Scenario sc;
    const GrayImage ref(580, 580, 170);
    const std::vector<GrayImage> frames{GrayImage(580, 580, 100), GrayImage(580, 580, 170)};
    try {
        calibrate_regression(ref, frames, 4.0, sc.geom, 290, 290);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("frame"), std::string::npos);
    }
}

TEST(Evaluate, StandardSchemeClosedLoop)
{
    Scenario sc;
    const SchemeResult r = evaluate_scheme(sc, sim::Scheme::Standard);
    ASSERT_TRUE(r.single_mae);
    ASSERT_TRUE(r.regression_mae);
    EXPECT_LE(*r.single_mae, 0.05);
    EXPECT_LE(*r.single_mae, *r.regression_mae);
    EXPECT_GE(r.reference_std, 3.0);
    EXPECT_LE(r.reference_std, 6.0);
    EXPECT_GE(r.timings.total(), 0.0);
}

TEST(Evaluate, NoisyClosedLoop)
{
    Scenario sc;
    sc.noise_sigma = 1.0;
    const SchemeResult r = evaluate_scheme(sc, sim::Scheme::Standard);
    ASSERT_TRUE(r.single_mae);
    EXPECT_LE(*r.single_mae, 0.10);
}

TEST(Evaluate, DeterministicAndTableShaped)
{
    Scenario sc;
    sc.protocol.test_presses = 4;
    sc.protocol.regression_presses = 6;
    const sim::Scheme schemes[] = {sim::Scheme::Standard, sim::Scheme::Scheme1, sim::Scheme::Scheme2,
                                   sim::Scheme::Scheme3, sim::Scheme::Scheme4};
    const EvalReport a = evaluate(sc, schemes);
    const EvalReport b = evaluate(sc, schemes);
    ASSERT_EQ(a.schemes.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a.schemes[i].single_mae, b.schemes[i].single_mae);
        EXPECT_EQ(a.schemes[i].regression_mae, b.schemes[i].regression_mae);
        EXPECT_EQ(a.schemes[i].reference_std, b.schemes[i].reference_std);
    }
    const std::string table = format_table(a);
    std::istringstream lines(table);
    std::string header, line;
    std::getline(lines, header);
    for (const char* col : {"standard", "s1", "s2", "s3", "s4"})
        EXPECT_NE(header.find(col), std::string::npos);
    std::vector<std::string> rows;
    while (std::getline(lines, line))
        if (!line.empty())
            rows.push_back(line);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].rfind("reference std", 0), 0u);
    EXPECT_EQ(rows[1].rfind("single-image MAE", 0), 0u);
    EXPECT_EQ(rows[2].rfind("regression MAE", 0), 0u);
    EXPECT_GE(a.schemes[4].reference_std, 3.0 * a.schemes[0].reference_std);
}

TEST(Evaluate, FailedCellDoesNotStopOthers)
{
    Scenario sc;
    sc.protocol.test_presses = 2;
    sc.protocol.regression_presses = 1;  // a single press still fits, but a tiny one does not
    sc.protocol.regression_depth_min = sc.protocol.regression_depth_max = 0.01;
    const SchemeResult r = evaluate_scheme(sc, sim::Scheme::Standard);
    EXPECT_TRUE(r.single_mae);
    EXPECT_FALSE(r.regression_mae);
    EXPECT_FALSE(r.regression_error.empty());
    EXPECT_NE(format_table({{r}}).find("error"), std::string::npos);
}

TEST(ContactClouds, FilterAndSampling)
{
    const SensorGeometry g;
    DepthMap d(580, 580, 0.0);
    for (int v = 200; v < 260; ++v)
        for (int u = 300; u < 330; ++u)
            d.at(u, v) = 0.4;
    const PointCloud full = contact_cloud(d, g, 0.05);
    EXPECT_EQ(full.size(), 60u * 30u);
    EXPECT_EQ(contact_cloud(d, g, 0.05, 2).size(), 30u * 15u);
    const PointCloud jit = jittered_contact_cloud(d, g, 0.05, 3, 7);
    EXPECT_GT(jit.size(), 100u);
    EXPECT_LT(jit.size(), 60u * 30u / 4);
    for (const auto& p : jit) {
        EXPECT_GE(p.z(), -0.4 - 1e-12);
        EXPECT_LT(p.z(), -0.05);
    }
    EXPECT_EQ(jittered_contact_cloud(d, g, 0.05, 3, 7), jit);
}

TEST(Tracking, NutRotationWithinTwoDegrees)
{
    const Scenario sc;
    const TrackingScenario tr;
    const TrackResult r = run_tracking(sc, tr);
    ASSERT_EQ(r.frames.size(), 12u);
    for (const auto& f : r.frames) {
        EXPECT_TRUE(f.report.error.empty());
        EXPECT_LE(f.yaw_error_deg, 2.0);
        EXPECT_LE(f.report.pose.orthonormalityError(), 1e-9);
    }
    EXPECT_LE(r.max_yaw_error_deg, 2.0);
    EXPECT_LE(r.seconds, 60.0);
}
