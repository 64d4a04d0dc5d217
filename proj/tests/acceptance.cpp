#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dtact/io.hpp"
#include "dtact/workflow.hpp"
#include "support.hpp"

using namespace dtact;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double rotation_error_deg(const Pose& a, const Pose& b) { return (a.inverse() * b).angleDegrees(); }

// Worst orthonormality error over every ICP rotation produced by the run.
double g_worst_orthonormality = 0.0;

void note_rotation(const Pose& p) { g_worst_orthonormality = std::max(g_worst_orthonormality, p.orthonormalityError()); }

const sim::Scheme kAllSchemes[] = {sim::Scheme::Standard, sim::Scheme::Scheme1, sim::Scheme::Scheme2,
                                   sim::Scheme::Scheme3, sim::Scheme::Scheme4};

const workflow::EvalReport& noiseless_report()
{
    static const workflow::EvalReport report = workflow::evaluate(workflow::Scenario{}, kAllSchemes);
    return report;
}

const workflow::SchemeResult& scheme_result(sim::Scheme scheme)
{
    for (const auto& s : noiseless_report().schemes)
        if (s.scheme == scheme)
            return s;
    throw Error("scheme missing from report");
}

Outcome closed_loop_accuracy()
{
    const auto t0 = Clock::now();
    workflow::Scenario clean;
    const auto a = workflow::evaluate_scheme(clean, sim::Scheme::Standard);
    workflow::Scenario noisy;
    noisy.noise_sigma = 1.0;
    const auto b = workflow::evaluate_scheme(noisy, sim::Scheme::Standard);
    const double secs = seconds_since(t0);
    if (!a.single_mae || !b.single_mae)
        return {false, "calibration failed: " + a.single_error + b.single_error};
    const bool ok = *a.single_mae <= 0.05 && *b.single_mae <= 0.10 && secs <= 30.0;
    return {ok, fmt("MAE %.4f mm noiseless (<= 0.05), %.4f mm sigma=1 (<= 0.10), %.1f s (<= 30)", *a.single_mae,
                    *b.single_mae, secs)};
}

Outcome method_ordering()
{
    bool ok = true;
    std::string detail;
    for (const auto& s : noiseless_report().schemes) {
        const bool cell = s.single_mae && s.regression_mae && *s.single_mae <= *s.regression_mae;
        ok = ok && cell;
        detail += fmt("%s %.4f<=%.4f ", sim::scheme_name(s.scheme).c_str(), s.single_mae.value_or(NAN),
                      s.regression_mae.value_or(NAN));
    }
    return {ok, detail};
}

Outcome illumination_robustness()
{
    const auto& standard = scheme_result(sim::Scheme::Standard);
    if (!standard.single_mae)
        return {false, "standard calibration failed"};
    bool ok = true;
    std::string detail = fmt("standard %.4f; ", *standard.single_mae);
    for (auto scheme : {sim::Scheme::Scheme1, sim::Scheme::Scheme2, sim::Scheme::Scheme3}) {
        const auto& s = scheme_result(scheme);
        const double ratio = s.single_mae ? *s.single_mae / *standard.single_mae : INFINITY;
        ok = ok && ratio <= 2.0;
        detail += fmt("%s x%.2f ", sim::scheme_name(scheme).c_str(), ratio);
    }
    return {ok, detail + "(<= 2x)"};
}

Outcome reference_statistics()
{
    const double std0 = scheme_result(sim::Scheme::Standard).reference_std;
    const double std4 = scheme_result(sim::Scheme::Scheme4).reference_std;
    const bool ok = std0 >= 3.0 && std0 <= 6.0 && std4 >= 3.0 * std0;
    return {ok, fmt("standard std %.3f in [3,6]; s4 std %.3f = %.2fx (>= 3x)", std0, std4, std4 / std0)};
}

Outcome depth_range_bound()
{
    bool ok = true;
    std::string detail;
    for (double T : {1.0, 1.5, 2.0, 2.5, 3.0}) {
        workflow::Scenario sc;
        sc.optics.thickness = T;
        const auto illum = sim::make_illumination(sim::Scheme::Standard, sc.geom.cropSize(), sc.led_sigma);
        sim::Rng rng(sc.seed);
        const GrayImage ref = sim::render_reference(sc.optics, illum, 0.0, rng);
        workflow::BallPress press;
        press.ball_radius = 4.0;
        press.d_max = std::min(1.8, T);
        const GrayImage cal = workflow::render_press(press, sc, illum, 1, rng);
        const auto table = workflow::calibrate_single(ref, cal, press.ball_radius, sc.geom);
        const sim::ObjectSpec screw{sim::ObjectKind::SetScrew, {0.0, 0.0}, 0.0, T + 1.0};
        const GrayImage frame =
            sim::render_tactile(sim::synth_object_depth(screw, sc.geom, sc.optics), sc.optics, illum);
        const recon::Pipeline pipeline(workflow::pipeline_config(sc, table), ref);
        const DepthMap depth = pipeline.process(frame);
        const double mx = *std::max_element(depth.data().begin(), depth.data().end());
        ok = ok && mx <= T + 0.02;
        detail += fmt("T=%.1f max %.4f; ", T, mx);
    }
    return {ok, detail + "(<= T+0.02)"};
}

Outcome nonplanar_consistency()
{
    const SensorGeometry geom;
    const CameraModel cam;
    const sim::OpticalModel optics;
    const auto illum = sim::make_illumination(sim::Scheme::Standard, geom.cropSize());
    const GrayImage ref = sim::render_tactile(DepthMap(geom.cropSize(), geom.cropSize(), 0.0), optics, illum);
    std::array<double, 256> entries{};
    for (int i = 0; i < 256; ++i)
        entries[static_cast<std::size_t>(i)] = std::min(2.0, 0.01 * i);
    recon::PipelineConfig config;
    config.method = calib::MappingList(entries, 200);
    const DepthMap zero = recon::Pipeline(config, ref).process(ref);

    const SphereSurface sphere;
    const auto s = recon::raycast_project(zero, sphere, cam, geom);
    double sphere_dev = s.missed == 0 ? 0.0 : INFINITY;
    for (const auto& p : s.points)
        sphere_dev = std::max(sphere_dev, std::abs((p - sphere.center).norm() - sphere.radius));

    const CylinderSurface cyl;
    const auto c = recon::raycast_project(zero, cyl, cam, geom);
    double cyl_dev = c.missed == 0 ? 0.0 : INFINITY;
    for (const auto& p : c.points) {
        Eigen::Vector3d rel = p - cyl.axis_point;
        rel -= rel.dot(cyl.axis) * cyl.axis;
        cyl_dev = std::max(cyl_dev, std::abs(rel.norm() - cyl.radius));
    }

    const DepthMap bumpy = check::Gen(6).depth(geom.cropSize(), geom.cropSize(), 2.0);
    const auto rc = recon::raycast_project(bumpy, PlanarSurface{}, cam, geom);
    const auto direct = recon::depth_to_pointcloud(bumpy, geom);
    double planar_dev = rc.points.size() == direct.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(rc.points.size(), direct.size()); ++i)
        planar_dev = std::max(planar_dev, (rc.points[i] - direct[i]).norm());

    const bool ok = sphere_dev <= 1e-6 && cyl_dev <= 1e-6 && planar_dev <= 1e-9;
    return {ok, fmt("sphere %.2e, cylinder %.2e (<= 1e-6); planar %.2e (<= 1e-9) mm", sphere_dev, cyl_dev, planar_dev)};
}

Outcome icp_correctness()
{
    check::Gen gen(2024);
    double clean_rot = 0.0, clean_trans = 0.0, noisy_rot = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const PointCloud model = gen.patch(1500, 6.0);
        Pose truth;
        truth.rotation = Eigen::AngleAxisd(5.0 * std::numbers::pi / 180.0, gen.unit()).toRotationMatrix();
        truth.translation = 0.2 * gen.unit();
        const PointCloud target = check::transformed(model, truth);
        const auto clean = pose::icp(model, target, Pose::identity(), {100, 1e-9, 5.0, true});
        note_rotation(clean.pose);
        clean_rot = std::max(clean_rot, rotation_error_deg(clean.pose, truth));
        clean_trans = std::max(clean_trans, (clean.pose.translation - truth.translation).norm());

        PointCloud noisy_target = target;
        for (auto& p : noisy_target)
            p += Eigen::Vector3d(gen.normal(0.01), gen.normal(0.01), gen.normal(0.01));
        const auto noisy = pose::icp(model, noisy_target, Pose::identity(), {100, 1e-9, 5.0, true});
        note_rotation(noisy.pose);
        noisy_rot = std::max(noisy_rot, rotation_error_deg(noisy.pose, truth));
    }

    int monotone = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const PointCloud model = gen.patch(static_cast<std::size_t>(gen.integer(200, 800)), 6.0);
        Pose truth;
        truth.rotation = Eigen::AngleAxisd(gen.uniform(-0.3, 0.3), gen.unit()).toRotationMatrix();
        truth.translation = {gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-0.3, 0.3)};
        PointCloud target = check::transformed(model, truth);
        for (auto& p : target)
            p += Eigen::Vector3d(gen.normal(0.02), gen.normal(0.02), gen.normal(0.02));
        pose::IcpOptions opt;
        opt.max_iter = gen.integer(1, 60);
        opt.accelerate = trial % 2 == 0;
        const auto r = pose::icp(model, target, Pose::identity(), opt);
        note_rotation(r.pose);
        monotone += std::is_sorted(r.rmse_history.rbegin(), r.rmse_history.rend()) ? 1 : 0;
    }

    int nn_mismatches = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const PointCloud target = gen.cloud(200, 5.0);
        const PointCloud query = gen.cloud(200, 6.0);
        const auto fast = pose::nearest_neighbors(query, target);
        for (std::size_t i = 0; i < query.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < target.size(); ++j)
                if ((query[i] - target[j]).squaredNorm() < (query[i] - target[best]).squaredNorm())
                    best = j;
            nn_mismatches += fast[i].index == best ? 0 : 1;
        }
    }

    const bool ok = clean_rot <= 0.5 && clean_trans <= 0.05 && noisy_rot <= 1.0 && monotone == 100 && nn_mismatches == 0;
    return {ok, fmt("clean %.4f deg / %.4f mm (<= 0.5 / 0.05); noisy %.4f deg (<= 1); monotone %d/100; "
                    "NN mismatches %d",
                    clean_rot, clean_trans, noisy_rot, monotone, nn_mismatches)};
}

Outcome pose_tracking()
{
    const auto r = workflow::run_tracking(workflow::Scenario{}, workflow::TrackingScenario{});
    bool errors = false;
    for (const auto& f : r.frames) {
        note_rotation(f.report.pose);
        errors = errors || !f.report.error.empty();
    }
    const bool ok = r.frames.size() == 12 && !errors && r.max_yaw_error_deg <= 2.0 && r.seconds <= 60.0;
    return {ok, fmt("%zu frames, max yaw error %.3f deg (<= 2), %.2f s (<= 60)", r.frames.size(), r.max_yaw_error_deg,
                    r.seconds)};
}

Outcome performance()
{
    const SensorGeometry geom;
    const sim::OpticalModel optics;
    const auto illum = sim::make_illumination(sim::Scheme::Standard, geom.cropSize());
    sim::Rng rng(3);
    const GrayImage ref = sim::embed_in_frame(sim::render_reference(optics, illum, 1.0, rng), geom);
    const GrayImage frame = sim::embed_in_frame(
        sim::render_tactile(sim::sphere_press_depth(geom, 5.0, 1.2, {0, 0}, optics), optics, illum, 1.0, rng), geom);
    const GrayImage cal = sim::render_tactile(sim::sphere_press_depth(geom, 4.0, 1.8, {0, 0}, optics), optics, illum);
    recon::PipelineConfig config;
    config.camera.k1 = 0.02;
    config.method = workflow::calibrate_single(recon::crop_center(ref, geom), cal, 4.0, geom);
    const recon::Pipeline pipeline(config, ref);
    pipeline.process(frame);
    double pipe_ms = INFINITY;
    for (int i = 0; i < 10; ++i) {
        const auto t0 = Clock::now();
        pipeline.process(frame);
        pipe_ms = std::min(pipe_ms, 1e3 * seconds_since(t0));
    }

    check::Gen gen(13);
    const PointCloud model = gen.patch(4000, 6.0);
    const PointCloud target = check::transformed(model, Pose::fromYaw(5.0, {0.2, 0.1, 0.0}));
    double icp_ms = INFINITY;
    for (int i = 0; i < 5; ++i) {
        const auto t0 = Clock::now();
        const auto r = pose::icp(model, target, Pose::identity());
        icp_ms = std::min(icp_ms, 1e3 * seconds_since(t0));
        note_rotation(r.pose);
    }
    const bool ok = pipe_ms <= 50.0 && icp_ms <= 100.0;
    return {ok, fmt("pipeline %.1f ms/frame (<= 50); ICP 4000 pts %.1f ms (<= 100)", pipe_ms, icp_ms)};
}

Outcome numerical_hygiene()
{
    int monotone = 0;
    int failed = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        workflow::Scenario sc;
        sc.seed = seed;
        sc.noise_sigma = 1.0;
        sim::Rng press_rng(seed);
        const auto presses = workflow::draw_presses(sc.protocol, sc.optics.thickness, press_rng);
        const auto illum = sim::make_illumination(kAllSchemes[seed % 5], sc.geom.cropSize(), sc.led_sigma);
        sim::Rng rng(seed * 7919);
        const GrayImage ref = sim::render_reference(sc.optics, illum, sc.noise_sigma, rng, sc.reference_frames);
        try {
            const GrayImage cal = workflow::render_press(presses.calibration, sc, illum, sc.calibration_frames, rng);
            const auto table = workflow::calibrate_single(ref, cal, presses.calibration.ball_radius, sc.geom);
            monotone += table.isMonotone() ? 1 : 0;
        }
        catch (const Error&) {
            ++failed;
        }
    }

    check::Gen gen(77);
    bool formats = true;
    for (int i = 0; i < 20; ++i) {
        const GrayImage img = gen.gray(gen.integer(1, 64), gen.integer(1, 64));
        formats = formats && io::decode_pgm(io::encode_pgm(img)) == img;
        DepthMap d(gen.integer(1, 64), gen.integer(1, 64));
        for (auto& v : d.data())
            v = static_cast<float>(gen.uniform(0.0, 3.0));
        formats = formats && io::decode_depth(io::encode_depth(d)) == d;
        PointCloud cloud(static_cast<std::size_t>(gen.integer(0, 200)));
        for (auto& p : cloud)
            p = Eigen::Vector3f(float(gen.uniform(-12, 12)), float(gen.uniform(-12, 12)), float(gen.uniform(-3, 0)))
                    .cast<double>();
        formats = formats && io::decode_ply(io::encode_ply(cloud)) == cloud;
        const io::CalibrationFile calib{calib::RegressionModel{gen.uniform(0, 1e-4), gen.uniform(0, 0.02), 290, 290},
                                        2.0};
        const auto back = io::decode_calibration(io::encode_calibration(calib));
        formats = formats && io::encode_calibration(back) == io::encode_calibration(calib) &&
                  std::get<calib::RegressionModel>(back.method) == std::get<calib::RegressionModel>(calib.method);
        Pose p;
        p.rotation = Eigen::AngleAxisd(gen.uniform(-3, 3), gen.unit()).toRotationMatrix();
        p.translation = {gen.uniform(-2, 2), gen.uniform(-2, 2), gen.uniform(-2, 2)};
        const std::vector<io::PoseRecord> recs{{i, true, 3, 0.01, p, ""}};
        const auto rback = io::decode_pose_report(io::encode_pose_report(recs));
        formats = formats && rback.size() == 1 && rback[0].pose.toArray() == p.toArray();
    }
    const bool ok = monotone == 50 && g_worst_orthonormality <= 1e-9 && formats;
    return {ok, fmt("monotone mapping lists %d/50 (%d failed calibrations); worst rotation orthonormality %.2e "
                    "(<= 1e-9); formats round-trip %s",
                    monotone, failed, g_worst_orthonormality, formats ? "exactly" : "with differences")};
}

}  // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"closed-loop reconstruction accuracy", closed_loop_accuracy},
        {"method ordering", method_ordering},
        {"illumination robustness", illumination_robustness},
        {"reference-image statistics", reference_statistics},
        {"depth-range bound", depth_range_bound},
        {"non-planar consistency", nonplanar_consistency},
        {"ICP correctness", icp_correctness},
        {"pose tracking", pose_tracking},
        {"performance", performance},
        {"numerical hygiene", numerical_hygiene},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        }
        catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2zu %-36s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
