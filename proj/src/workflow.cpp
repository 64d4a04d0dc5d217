#include "dtact/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

namespace dtact::workflow {

namespace {

double uniform(sim::Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

BallPress draw_press(sim::Rng& rng, double radius, double d_lo, double d_hi, double offset, double thickness)
{
    BallPress press;
    press.ball_radius = radius;
    const double cap = std::min(radius, thickness);
    press.d_max = std::min(d_lo < d_hi ? uniform(rng, d_lo, d_hi) : d_lo, cap);
    press.center.x = offset > 0.0 ? uniform(rng, -offset, offset) : 0.0;
    press.center.y = offset > 0.0 ? uniform(rng, -offset, offset) : 0.0;
    return press;
}

sim::Rng scheme_rng(std::uint64_t seed, sim::Scheme scheme)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(scheme) + 1u};
    return sim::Rng(seq);
}

}  // namespace

PressSet draw_presses(const PressProtocol& p, double thickness, sim::Rng& rng)
{
    if (p.regression_presses < 0 || p.test_presses < 0)
        throw ParameterError("press counts must be non-negative");
    PressSet set;
    set.calibration = draw_press(rng, p.calibration_radius, p.calibration_depth, p.calibration_depth,
                                 p.calibration_offset, thickness);
    for (int i = 0; i < p.regression_presses; ++i)
        set.regression.push_back(draw_press(rng, p.regression_radius, p.regression_depth_min, p.regression_depth_max,
                                            p.regression_offset, thickness));
    for (int i = 0; i < p.test_presses; ++i)
        set.test.push_back(
            draw_press(rng, p.test_radius, p.test_depth_min, p.test_depth_max, p.test_offset, thickness));
    return set;
}

GrayImage render_press(const BallPress& press, const Scenario& scenario, const sim::IlluminationField& illum,
                       int frames, sim::Rng& rng)
{
    const DepthMap truth =
        sim::sphere_press_depth(scenario.geom, press.ball_radius, press.d_max, press.center, scenario.optics);
    if (scenario.noise_sigma <= 0.0 || frames <= 1)
        return sim::render_tactile(truth, scenario.optics, illum, scenario.noise_sigma, rng);
    std::vector<GrayImage> renders;
    renders.reserve(static_cast<std::size_t>(frames));
    for (int i = 0; i < frames; ++i)
        renders.push_back(sim::render_tactile(truth, scenario.optics, illum, scenario.noise_sigma, rng));
    return calib::average_frames(renders);
}

Eigen::Vector2d regression_center(sim::Scheme scheme, int crop_size)
{
    if (scheme == sim::Scheme::Scheme4)
        return {crop_size - 1.0, 0.0};
    return {crop_size / 2.0, crop_size / 2.0};
}

calib::MappingList calibrate_single(const GrayImage& reference, const GrayImage& press, double ball_radius,
                                    const SensorGeometry& geom, double threshold)
{
    const DifferenceImage diff = recon::difference(reference, press);
    const calib::ContactCircle circle = calib::detect_contact_circle(diff, {threshold});
    const DepthMap truth = calib::analytic_ball_depth(circle, ball_radius, geom);
    return calib::build_mapping_list(diff, truth, circle);
}

calib::RegressionModel calibrate_regression(const GrayImage& reference, std::span<const GrayImage> presses,
                                            double ball_radius, const SensorGeometry& geom, double center_u,
                                            double center_v, double threshold)
{
    std::vector<calib::CalibrationSample> samples;
    for (std::size_t i = 0; i < presses.size(); ++i) {
        try {
            const DifferenceImage diff = recon::difference(reference, presses[i]);
            const calib::ContactCircle circle = calib::detect_contact_circle(diff, {threshold});
            const DepthMap truth = calib::analytic_ball_depth(circle, ball_radius, geom);
            const auto part = calib::collect_samples(diff, truth, circle, center_u, center_v);
            samples.insert(samples.end(), part.begin(), part.end());
        }
        catch (const NoContactError& e) {
            throw NoContactError("frame " + std::to_string(i) + ": " + e.what());
        }
        catch (const InsufficientContactError& e) {
            throw InsufficientContactError("frame " + std::to_string(i) + ": " + e.what());
        }
        catch (const GeometryError& e) {
            throw GeometryError("frame " + std::to_string(i) + ": " + e.what());
        }
    }
    return calib::fit_regression(samples, center_u, center_v, geom.cropSize());
}

recon::PipelineConfig pipeline_config(const Scenario& scenario, recon::DepthMethod method)
{
    recon::PipelineConfig config;
    config.camera = scenario.camera;
    config.geom = scenario.geom;
    config.method = std::move(method);
    config.gaussian_kernel = scenario.gaussian_kernel;
    config.gaussian_passes = scenario.gaussian_passes;
    config.gaussian_sigma = scenario.gaussian_sigma;
    config.depth_clamp = scenario.optics.thickness;
    return config;
}

SchemeResult evaluate_scheme(const Scenario& scenario, sim::Scheme scheme)
{
    sim::Rng press_rng(scenario.seed);
    const PressSet presses = draw_presses(scenario.protocol, scenario.optics.thickness, press_rng);
    sim::Rng rng = scheme_rng(scenario.seed, scheme);

    SchemeResult result;
    result.scheme = scheme;
    const auto illum = sim::make_illumination(scheme, scenario.geom.cropSize(), scenario.led_sigma);
    const GrayImage reference =
        sim::render_reference(scenario.optics, illum, scenario.noise_sigma, rng, std::max(1, scenario.reference_frames));
    result.reference_std = image_mean_std(reference).std;

    // Test frames are shared by both methods.
    std::vector<GrayImage> test_frames;
    std::vector<DepthMap> test_truth;
    for (const auto& press : presses.test) {
        test_truth.push_back(
            sim::sphere_press_depth(scenario.geom, press.ball_radius, press.d_max, press.center, scenario.optics));
        test_frames.push_back(sim::render_tactile(test_truth.back(), scenario.optics, illum, scenario.noise_sigma, rng));
    }

    auto run = [&](const recon::DepthMethod& method, recon::StageTimings* mean_timings) {
        const recon::Pipeline pipeline(pipeline_config(scenario, method), reference);
        double sum = 0.0;
        for (std::size_t i = 0; i < test_frames.size(); ++i) {
            recon::StageTimings t;
            const DepthMap depth = pipeline.process(test_frames[i], &t);
            sum += mean_absolute_error(depth, test_truth[i]);
            if (mean_timings) {
                mean_timings->rectify_ms += t.rectify_ms;
                mean_timings->gray_ms += t.gray_ms;
                mean_timings->difference_ms += t.difference_ms;
                mean_timings->mapping_ms += t.mapping_ms;
                mean_timings->smoothing_ms += t.smoothing_ms;
            }
        }
        const double n = static_cast<double>(std::max<std::size_t>(1, test_frames.size()));
        if (mean_timings) {
            mean_timings->rectify_ms /= n;
            mean_timings->gray_ms /= n;
            mean_timings->difference_ms /= n;
            mean_timings->mapping_ms /= n;
            mean_timings->smoothing_ms /= n;
        }
        return sum / n;
    };

    try {
        const GrayImage frame = render_press(presses.calibration, scenario, illum, scenario.calibration_frames, rng);
        const auto table = calibrate_single(reference, frame, presses.calibration.ball_radius, scenario.geom,
                                            scenario.circle_threshold);
        result.single_mae = run(table, &result.timings);
    }
    catch (const Error& e) {
        result.single_error = e.what();
    }

    try {
        std::vector<GrayImage> frames;
        for (const auto& press : presses.regression)
            frames.push_back(render_press(press, scenario, illum, scenario.calibration_frames, rng));
        const Eigen::Vector2d c = regression_center(scheme, scenario.geom.cropSize());
        const double radius = presses.regression.empty() ? scenario.protocol.regression_radius
                                                         : presses.regression.front().ball_radius;
        const auto model =
            calibrate_regression(reference, frames, radius, scenario.geom, c.x(), c.y(), scenario.circle_threshold);
        result.regression_mae = run(model, nullptr);
    }
    catch (const Error& e) {
        result.regression_error = e.what();
    }
    return result;
}

EvalReport evaluate(const Scenario& scenario, std::span<const sim::Scheme> schemes)
{
    EvalReport report;
    for (const auto scheme : schemes)
        report.schemes.push_back(evaluate_scheme(scenario, scheme));
    return report;
}

std::string format_table(const EvalReport& report)
{
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-20s", "");
    out += buf;
    for (const auto& s : report.schemes) {
        std::snprintf(buf, sizeof buf, "%12s", sim::scheme_name(s.scheme).c_str());
        out += buf;
    }
    out += '\n';

    auto row = [&](const char* label, auto value) {
        std::snprintf(buf, sizeof buf, "%-20s", label);
        out += buf;
        for (const auto& s : report.schemes) {
            const std::optional<double> v = value(s);
            if (v)
                std::snprintf(buf, sizeof buf, "%12.4f", *v);
            else
                std::snprintf(buf, sizeof buf, "%12s", "error");
            out += buf;
        }
        out += '\n';
    };
    row("reference std", [](const SchemeResult& s) { return std::optional<double>(s.reference_std); });
    row("single-image MAE", [](const SchemeResult& s) { return s.single_mae; });
    row("regression MAE", [](const SchemeResult& s) { return s.regression_mae; });
    return out;
}

PointCloud contact_cloud(const DepthMap& depth, const SensorGeometry& geom, double threshold, int stride)
{
    if (stride < 1)
        throw ParameterError("cloud stride must be at least 1");
    PointCloud cloud;
    for (int v = 0; v < depth.height(); v += stride)
        for (int u = 0; u < depth.width(); u += stride) {
            const double d = depth.at(u, v);
            if (d > threshold) {
                const SurfacePoint p = pixel_to_surface(geom, u, v);
                cloud.emplace_back(p.x, p.y, -d);
            }
        }
    return cloud;
}

PointCloud jittered_contact_cloud(const DepthMap& depth, const SensorGeometry& geom, double threshold, int spacing,
                                  std::uint64_t seed)
{
    if (spacing < 1)
        throw ParameterError("cloud spacing must be at least 1");
    sim::Rng rng(seed);
    std::uniform_real_distribution<double> offset(0.0, static_cast<double>(spacing));
    PointCloud cloud;
    for (int v0 = 0; v0 < depth.height(); v0 += spacing)
        for (int u0 = 0; u0 < depth.width(); u0 += spacing) {
            const double fu = u0 + offset(rng);
            const double fv = v0 + offset(rng);
            const int iu = static_cast<int>(fu);
            const int iv = static_cast<int>(fv);
            if (iu + 1 >= depth.width() || iv + 1 >= depth.height())
                continue;
            const double a = fu - iu;
            const double b = fv - iv;
            const double d = (1 - a) * (1 - b) * depth.at(iu, iv) + a * (1 - b) * depth.at(iu + 1, iv) +
                             (1 - a) * b * depth.at(iu, iv + 1) + a * b * depth.at(iu + 1, iv + 1);
            if (d > threshold) {
                const SurfacePoint p = pixel_to_surface(geom, fu, fv);
                cloud.emplace_back(p.x, p.y, -d);
            }
        }
    return cloud;
}

TrackResult run_tracking(const Scenario& scenario, const TrackingScenario& tracking)
{
    if (tracking.frames < 1)
        throw ParameterError("tracking needs at least one frame");
    sim::Rng rng(scenario.seed);
    const auto illum = sim::make_illumination(sim::Scheme::Standard, scenario.geom.cropSize(), scenario.led_sigma);

    sim::Rng press_rng(scenario.seed);
    const PressSet presses = draw_presses(scenario.protocol, scenario.optics.thickness, press_rng);
    const GrayImage reference = sim::render_reference(scenario.optics, illum, tracking.noise_sigma, rng,
                                                      std::max(1, scenario.reference_frames));
    Scenario calib_scenario = scenario;
    calib_scenario.noise_sigma = tracking.noise_sigma;
    const GrayImage calib_frame =
        render_press(presses.calibration, calib_scenario, illum, scenario.calibration_frames, rng);
    const auto table = calibrate_single(reference, calib_frame, presses.calibration.ball_radius, scenario.geom,
                                        scenario.circle_threshold);
    const recon::Pipeline pipeline(pipeline_config(scenario, table), reference);

    std::vector<Pose> trajectory;
    for (int k = 0; k < tracking.frames; ++k)
        trajectory.push_back(Pose::fromYaw(k * tracking.step_deg, Eigen::Vector3d::Zero()));
    const auto frames = sim::render_sequence(tracking.object, trajectory, scenario.geom, scenario.optics, illum,
                                             tracking.noise_sigma, rng);
    const auto model_frame = sim::render_sequence(tracking.object, {Pose::identity()}, scenario.geom,
                                                  scenario.optics, illum, tracking.noise_sigma, rng);

    const auto t0 = std::chrono::steady_clock::now();
    const PointCloud model = jittered_contact_cloud(pipeline.process(model_frame.front().image), scenario.geom,
                                                    tracking.contact_threshold, tracking.model_spacing,
                                                    tracking.model_seed);
    std::vector<PointCloud> clouds;
    for (const auto& frame : frames)
        clouds.push_back(
            contact_cloud(pipeline.process(frame.image), scenario.geom, tracking.contact_threshold,
                                       tracking.frame_stride));
    const auto reports = pose::track_pose(clouds, model, tracking.icp);
    TrackResult result;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (std::size_t k = 0; k < reports.size(); ++k) {
        TrackFrame f;
        f.report = reports[k];
        f.truth = frames[k].pose;
        f.yaw_error_deg = pose::yaw_error_modulo(f.report.pose.yawDegrees(), f.truth.yawDegrees(), tracking.symmetry);
        f.translation_error_mm = (f.report.pose.translation - f.truth.translation).head<2>().norm();
        if (!f.report.error.empty())
            f.yaw_error_deg = 180.0;
        result.max_yaw_error_deg = std::max(result.max_yaw_error_deg, f.yaw_error_deg);
        result.frames.push_back(std::move(f));
    }
    return result;
}

}  // namespace dtact::workflow
