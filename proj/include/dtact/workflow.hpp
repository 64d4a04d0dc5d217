#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtact/calib.hpp"
#include "dtact/pose.hpp"
#include "dtact/recon.hpp"
#include "dtact/sim.hpp"

/// End-to-end procedures built from the module operations: calibration from
/// images, the closed-loop accuracy study and nut tracking.
namespace dtact::workflow {

struct BallPress
{
    SurfacePoint center{};  // mm
    double ball_radius = 4.0;
    double d_max = 1.0;
};

/// Ball-press placement for calibration and testing.
struct PressProtocol
{
    double calibration_radius = 4.0;
    double calibration_depth = 1.8;
    double calibration_offset = 0.7;    // |x|,|y| bound of the near-center press, mm
    int regression_presses = 30;
    double regression_radius = 4.0;
    double regression_depth_min = 0.6;
    double regression_depth_max = 1.8;
    double regression_offset = 8.0;
    int test_presses = 20;
    double test_radius = 5.0;
    double test_depth_min = 0.4;
    double test_depth_max = 1.5;
    double test_offset = 7.0;
};

struct PressSet
{
    BallPress calibration;
    std::vector<BallPress> regression;
    std::vector<BallPress> test;
};

/// Draws press depths and placements. Depths are capped at the layer
/// thickness so every press is renderable.
PressSet draw_presses(const PressProtocol& protocol, double thickness, sim::Rng& rng);

struct Scenario
{
    SensorGeometry geom;
    CameraModel camera;
    sim::OpticalModel optics;
    double led_sigma = sim::kDefaultLedSigma;
    double noise_sigma = 0.0;       // per-frame Gaussian noise, gray levels
    int reference_frames = 16;      // averaged to form the reference
    int calibration_frames = 16;    // averaged per calibration press
    double circle_threshold = 5.0;
    int gaussian_kernel = 7;
    int gaussian_passes = 2;
    double gaussian_sigma = 1.5;
    PressProtocol protocol;
    std::uint64_t seed = 1;
};

/// Rendered frame of a press (noisy when noise_sigma > 0), averaged over
/// `frames` renders.
GrayImage render_press(const BallPress& press, const Scenario& scenario, const sim::IlluminationField& illum,
                       int frames, sim::Rng& rng);

/// Regression reference center for a scheme: the crop center, or the
/// upper-right corner for the corner-lit Scheme4.
Eigen::Vector2d regression_center(sim::Scheme scheme, int crop_size);

/// Single-image calibration from one press frame (crop size).
calib::MappingList calibrate_single(const GrayImage& reference, const GrayImage& press, double ball_radius,
                                    const SensorGeometry& geom, double threshold = 5.0);

/// Regression calibration from press frames of one ball radius. Errors are
/// rethrown with the offending frame index in the message.
calib::RegressionModel calibrate_regression(const GrayImage& reference, std::span<const GrayImage> presses,
                                            double ball_radius, const SensorGeometry& geom, double center_u,
                                            double center_v, double threshold = 5.0);

recon::PipelineConfig pipeline_config(const Scenario& scenario, recon::DepthMethod method);

struct SchemeResult
{
    sim::Scheme scheme = sim::Scheme::Standard;
    double reference_std = 0.0;
    std::optional<double> single_mae;      // mm, empty when the cell failed
    std::optional<double> regression_mae;  // mm
    std::string single_error;
    std::string regression_error;
    recon::StageTimings timings;           // mean per test frame, single-image method
};

/// Renders, calibrates both methods and reconstructs the test presses under
/// one illumination scheme. Every scheme draws from the same press set.
SchemeResult evaluate_scheme(const Scenario& scenario, sim::Scheme scheme);

struct EvalReport
{
    std::vector<SchemeResult> schemes;
};

EvalReport evaluate(const Scenario& scenario, std::span<const sim::Scheme> schemes);

/// Table with one column per scheme and rows for the reference std and the
/// two MAEs.
std::string format_table(const EvalReport& report);

struct TrackingScenario
{
    sim::ObjectSpec object{sim::ObjectKind::HexNut, {0.0, 0.0}, 0.0, 0.5};
    int frames = 12;
    double step_deg = 5.0;
    double noise_sigma = 0.0;
    int symmetry = 6;
    double contact_threshold = 0.05;  // mm
    int model_spacing = 3;            // pixels between model cloud samples
    int frame_stride = 1;
    std::uint64_t model_seed = 7;
    pose::IcpOptions icp{200, 1e-7, 5.0, true};
};

/// Contact-only cloud of a depth map (D > threshold), sampled every
/// `stride` pixels.
PointCloud contact_cloud(const DepthMap& depth, const SensorGeometry& geom, double threshold, int stride = 1);

/// Contact-only cloud sampled at one bilinearly interpolated point per
/// `spacing` x `spacing` cell, jittered within the cell. Model clouds are
/// taken this way so they do not share the pixel lattice of the frames,
/// which would otherwise pin ICP to whatever pose aligns the two lattices.
PointCloud jittered_contact_cloud(const DepthMap& depth, const SensorGeometry& geom, double threshold, int spacing,
                                  std::uint64_t seed);

struct TrackFrame
{
    pose::IcpReport report;
    Pose truth;
    double yaw_error_deg = 0.0;  // modulo the object symmetry
    double translation_error_mm = 0.0;
};

struct TrackResult
{
    std::vector<TrackFrame> frames;
    double max_yaw_error_deg = 0.0;
    double seconds = 0.0;  // reconstruction + ICP wall time
};

/// Renders a rotating object, reconstructs every frame with a single-image
/// model calibrated under the scenario, and tracks it against the cloud of
/// the unrotated object.
TrackResult run_tracking(const Scenario& scenario, const TrackingScenario& tracking);

}  // namespace dtact::workflow
