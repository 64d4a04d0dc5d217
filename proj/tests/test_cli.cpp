#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "dtact/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dtact;

namespace {

struct Result
{
    int code = -1;
    std::string output;
};

Result run(const std::string& args)
{
    const std::string cmd = std::string(DTACT_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
        r.output.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test
{
  protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("dtact_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

    std::size_t file_count(const std::string& rel) const
    {
        return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir_ / rel), fs::directory_iterator()));
    }

    void simulate_basics()
    {
        ASSERT_EQ(run("simulate --mode reference --out " + p("ref")).code, 0);
        ASSERT_EQ(run("simulate --mode calibration --out " + p("cal")).code, 0);
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateSinglePressWritesThreeFiles)
{
    const Result r = run("simulate --mode press --out " + p("press"));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(file_count("press"), 3u);
    EXPECT_TRUE(fs::exists(p("press/frame_000.pgm")));
    EXPECT_TRUE(fs::exists(p("press/frame_000.depth")));
    EXPECT_TRUE(fs::exists(p("press/manifest.json")));
    const GrayImage img = io::load_pgm(p("press/frame_000.pgm"));
    EXPECT_EQ(img.width(), 800);
    EXPECT_EQ(img.height(), 600);
    EXPECT_EQ(io::load_depth(p("press/frame_000.depth")).width(), 580);
}

TEST_F(Cli, SimulateIsSeedReproducible)
{
    ASSERT_EQ(run("simulate --mode test --noise 1 --seed 5 --out " + p("a")).code, 0);
    ASSERT_EQ(run("simulate --mode test --noise 1 --seed 5 --out " + p("b")).code, 0);
    ASSERT_EQ(run("simulate --mode test --noise 1 --seed 6 --out " + p("c")).code, 0);
    EXPECT_EQ(file_count("a"), 41u);
    for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
        const auto name = entry.path().filename();
        EXPECT_EQ(io::read_file(entry.path()), io::read_file(dir_ / "b" / name)) << name;
    }
    EXPECT_NE(io::read_file(p("a/frame_000.pgm")), io::read_file(p("c/frame_000.pgm")));
}

TEST_F(Cli, CalibrateSingleAndRegression)
{
    simulate_basics();
    ASSERT_EQ(run("simulate --mode regression --out " + p("reg")).code, 0);
    Result r = run("calibrate --reference " + p("ref/frame_000.pgm") + " " + p("cal/manifest.json") + " --out " +
                   p("model"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto single = io::load_calibration(p("model/calibration.txt"));
    EXPECT_EQ(std::get<calib::MappingList>(single.method).entries().size(), 256u);

    r = run("calibrate --method regression --reference " + p("ref/frame_000.pgm") + " " + p("reg/manifest.json") +
            " --out " + p("regmodel"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto reg = io::load_calibration(p("regmodel/calibration.txt"));
    EXPECT_GT(std::get<calib::RegressionModel>(reg.method).b_c, 0.0);
}

TEST_F(Cli, RegressionFromOnePressFails)
{
    simulate_basics();
    const Result r = run("calibrate --method regression --reference " + p("ref/frame_000.pgm") + " " +
                         p("cal/frame_000.pgm") + " --out " + p("x"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("at least 2"), std::string::npos);
    EXPECT_EQ(std::count(r.output.begin(), r.output.end(), '\n'), 1);
}

TEST_F(Cli, ReconstructZeroContactAndPress)
{
    simulate_basics();
    ASSERT_EQ(run("simulate --mode press --out " + p("press")).code, 0);
    ASSERT_EQ(run("simulate --mode test --out " + p("test")).code, 0);
    ASSERT_EQ(run("calibrate --reference " + p("ref/frame_000.pgm") + " " + p("cal/manifest.json") + " --out " +
                  p("model"))
                  .code,
              0);

    Result r = run("reconstruct --calibration " + p("model/calibration.txt") + " --reference " +
                   p("ref/frame_000.pgm") + " " + p("ref/frame_000.pgm") + " --out " + p("zero"));
    ASSERT_EQ(r.code, 0) << r.output;
    const DepthMap zero = io::load_depth(p("zero/frame_000.depth"));
    for (float v : zero.data())
        ASSERT_EQ(v, 0.0f);
    const PointCloud grid = io::load_ply(p("zero/frame_000.ply"));
    EXPECT_EQ(grid.size(), 580u * 580u);
    for (std::size_t i = 0; i < grid.size(); i += 97)
        EXPECT_EQ(grid[i].z(), 0.0);

    r = run("reconstruct --calibration " + p("model/calibration.txt") + " --reference " + p("ref/frame_000.pgm") +
            " " + p("test/manifest.json") + " --out " + p("rec"));
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("smoothing"), std::string::npos);
    const auto report = nlohmann::json::parse(io::read_file(p("rec/reconstruct.json")));
    EXPECT_EQ(report["frames"].size(), 20u);
    EXPECT_LE(report["mean_mae_mm"].get<double>(), 0.05);
    const DepthMap est = io::load_depth(p("rec/frame_003.depth"));
    const DepthMap truth = io::load_depth(p("test/frame_003.depth"));
    EXPECT_LE(mean_absolute_error(est, truth), 0.05);

    r = run("reconstruct --contact-only 0.05 --calibration " + p("model/calibration.txt") + " --reference " +
            p("ref/frame_000.pgm") + " " + p("press/manifest.json") + " --out " + p("contact"));
    ASSERT_EQ(r.code, 0) << r.output;
    const PointCloud contact = io::load_ply(p("contact/frame_000.ply"));
    EXPECT_GT(contact.size(), 100u);
    EXPECT_LT(contact.size(), 580u * 580u);
}

TEST_F(Cli, ReconstructWithoutReferenceFails)
{
    simulate_basics();
    ASSERT_EQ(run("calibrate --reference " + p("ref/frame_000.pgm") + " " + p("cal/manifest.json") + " --out " +
                  p("model"))
                  .code,
              0);
    const Result r =
        run("reconstruct --calibration " + p("model/calibration.txt") + " " + p("cal/manifest.json") + " --out " +
            p("x"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("reference"), std::string::npos);
}

TEST_F(Cli, MalformedInputsGiveOneLineDiagnostics)
{
    io::write_file(p("bad.pgm"), "P5\n10 10\n255\nabc");
    Result r = run("calibrate --reference " + p("bad.pgm") + " " + p("bad.pgm"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("at byte"), std::string::npos);
    EXPECT_EQ(std::count(r.output.begin(), r.output.end(), '\n'), 1);

    io::write_file(p("bad.txt"), "DTCALIB 9\n");
    io::write_file(p("blank.pgm"), io::encode_pgm(GrayImage(800, 600, 100)));
    r = run("reconstruct --calibration " + p("bad.txt") + " --reference " + p("blank.pgm") + " " + p("blank.pgm"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("version"), std::string::npos);

    r = run("simulate --scheme s7");
    EXPECT_NE(r.code, 0);
    r = run("frobnicate");
    EXPECT_NE(r.code, 0);

    io::write_file(p("cfg.json"), R"({"optics": {"thickness": -1}})");
    r = run("simulate --config " + p("cfg.json") + " --out " + p("o"));
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(std::count(r.output.begin(), r.output.end(), '\n'), 1);
}

TEST_F(Cli, ConfigAndFlagOverrides)
{
    io::write_file(p("cfg.json"), R"({"seed": 3, "simulate": {"mode": "test"}, "protocol": {"test_presses": 2}})");
    const Result r = run("simulate --config " + p("cfg.json") + " --thickness 1.5 --scheme s4 --out " + p("o"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto m = nlohmann::json::parse(io::read_file(p("o/manifest.json")));
    EXPECT_EQ(m["frames"].size(), 2u);
    EXPECT_EQ(m["seed"], 3);
    EXPECT_EQ(m["scheme"], "s4");
    EXPECT_EQ(m["config"]["optics"]["thickness"], 1.5);
}

TEST_F(Cli, EvaluateWritesReportAndTable)
{
    io::write_file(p("cfg.json"), R"({"protocol": {"test_presses": 3, "regression_presses": 5}})");
    const Result r = run("evaluate --no-tracking --config " + p("cfg.json") + " --out " + p("ev"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto report = nlohmann::json::parse(io::read_file(p("ev/eval_report.json")));
    EXPECT_EQ(report["schemes"].size(), 5u);
    for (const auto& s : report["schemes"]) {
        EXPECT_GE(s["single_mae_mm"].get<double>(), 0.0);
        EXPECT_GE(s["timings_ms"]["total"].get<double>(), 0.0);
    }
    EXPECT_EQ(io::read_file(p("ev/eval_table.txt")), report["table"].get<std::string>());
    EXPECT_NE(r.output.find("single-image MAE"), std::string::npos);

    const Result one = run("evaluate --no-tracking --scheme s2 --config " + p("cfg.json") + " --out " + p("ev2"));
    ASSERT_EQ(one.code, 0);
    const auto report2 = nlohmann::json::parse(io::read_file(p("ev2/eval_report.json")));
    ASSERT_EQ(report2["schemes"].size(), 1u);
    EXPECT_EQ(report2["schemes"][0]["single_mae_mm"], report["schemes"][2]["single_mae_mm"]);
}

TEST_F(Cli, TrackStaticObjectStaysAtModelPose)
{
    simulate_basics();
    ASSERT_EQ(run("calibrate --reference " + p("ref/frame_000.pgm") + " " + p("cal/manifest.json") + " --out " +
                  p("model"))
                  .code,
              0);
    ASSERT_EQ(run("simulate --mode object --out " + p("obj")).code, 0);
    const std::string frame = p("obj/frame_000.pgm");
    const Result r = run("track --calibration " + p("model/calibration.txt") + " --reference " +
                         p("ref/frame_000.pgm") + " " + frame + " " + frame + " " + frame + " --out " + p("trk"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto recs = io::decode_pose_report(io::read_file(p("trk/poses.txt")));
    ASSERT_EQ(recs.size(), 3u);
    for (const auto& rec : recs) {
        EXPECT_LT(rec.pose.angleDegrees(), 0.05);
        EXPECT_LT(rec.pose.translation.norm(), 0.01);
    }
}

TEST_F(Cli, TrackNutSequence)
{
    simulate_basics();
    ASSERT_EQ(run("calibrate --reference " + p("ref/frame_000.pgm") + " " + p("cal/manifest.json") + " --out " +
                  p("model"))
                  .code,
              0);
    ASSERT_EQ(run("simulate --mode sequence --out " + p("seq")).code, 0);
    EXPECT_TRUE(fs::exists(p("seq/model.pgm")));
    EXPECT_TRUE(fs::exists(p("seq/truth_poses.txt")));
    const Result r = run("track --calibration " + p("model/calibration.txt") + " --reference " +
                         p("ref/frame_000.pgm") + " " + p("seq/manifest.json") + " --out " + p("trk"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto recs = io::decode_pose_report(io::read_file(p("trk/poses.txt")));
    const auto truth = io::decode_pose_report(io::read_file(p("seq/truth_poses.txt")));
    ASSERT_EQ(recs.size(), 12u);
    ASSERT_EQ(truth.size(), 12u);
    for (std::size_t k = 0; k < recs.size(); ++k) {
        double e = std::fmod(std::abs(recs[k].pose.yawDegrees() - truth[k].pose.yawDegrees()), 60.0);
        e = std::min(e, 60.0 - e);
        EXPECT_LE(e, 2.0) << k;
    }
}
