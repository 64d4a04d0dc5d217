#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "dtact/calib.hpp"
#include "dtact/core.hpp"

namespace dtact::recon {

using DepthMethod = std::variant<calib::MappingList, calib::RegressionModel>;

struct PipelineConfig
{
    CameraModel camera;
    SensorGeometry geom;
    DepthMethod method;
    int gaussian_kernel = 7;
    int gaussian_passes = 2;
    double gaussian_sigma = 1.5;  // pixels
    double depth_clamp = 2.0;     // mm, the layer thickness

    void validate() const;
};

/// Removes lens distortion: each output pixel samples the distorted source
/// position bilinearly; samples outside the source take the nearest edge
/// value.
GrayImage undistort(const GrayImage& img, const CameraModel& cam);
RgbImage undistort(const RgbImage& img, const CameraModel& cam);

/// Centered crop_size x crop_size window. Throws ParameterError when the
/// window does not fit.
template <typename T, typename Tag>
Image<T, Tag> crop_center(const Image<T, Tag>& img, const SensorGeometry& geom)
{
    const int n = geom.cropSize();
    if (n > img.width() || n > img.height())
        throw ParameterError("crop window larger than the image");
    const int ou = (img.width() - n) / 2;
    const int ov = (img.height() - n) / 2;
    Image<T, Tag> out(n, n);
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
            out.at(u, v) = img.at(u + ou, v + ov);
    return out;
}

/// Per-pixel max(0, reference - contact).
DifferenceImage difference(const GrayImage& reference, const GrayImage& contact);

/// Intensity drop to depth with the configured method, clamped to
/// [0, depth_clamp].
DepthMap map_depth(const DifferenceImage& diff, const PipelineConfig& config);

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_kernel(int size, double sigma);

/// `gaussian_passes` separable Gaussian convolutions with reflect-101
/// borders (dcb|abcd|cba).
DepthMap gaussian_denoise(const DepthMap& depth, const PipelineConfig& config);

/// One point (x, y, -D) per pixel; z = 0 is the undeformed surface. With
/// min_depth >= 0 only pixels deeper than min_depth are kept.
PointCloud depth_to_pointcloud(const DepthMap& depth, const SensorGeometry& geom, double min_depth = -1.0);

struct RaycastResult
{
    PointCloud points;
    std::size_t missed = 0;
};

/// Projects a depth map onto a nominal sensing surface.
///
/// For curved shapes the camera center sits on the optical axis at
/// (0, 0, -fx * pixel_pitch), the distance at which one pixel spans one
/// pixel pitch on the z = 0 plane. Each pixel's ray passes through its field
/// point on that plane; the first hit with the shape is moved back along
/// the ray by the pressed depth. The flat sensor is an orthographic view of
/// its field, so the Planar shape reduces to depth_to_pointcloud. Rays that
/// miss the shape are skipped and counted.
RaycastResult raycast_project(const DepthMap& depth, const SurfaceShape& shape, const CameraModel& cam,
                              const SensorGeometry& geom);

/// Undistort + crop fused into one precomputed lookup over the crop window.
class Rectifier
{
  public:
    Rectifier(const CameraModel& cam, const SensorGeometry& geom);

    GrayImage apply(const GrayImage& raw) const;
    RgbImage apply(const RgbImage& raw) const;

  private:
    struct Tap
    {
        int index;      // top-left source pixel
        int step_u;     // 0 or 1
        int step_v;     // 0 or raw width
        float wu;
        float wv;
    };

    template <typename Pixel>
    void check(const Image<Pixel>& raw) const;

    SensorGeometry geom_;
    bool identity_;
    std::vector<Tap> taps_;
};

struct StageTimings
{
    double rectify_ms = 0.0;
    double gray_ms = 0.0;
    double difference_ms = 0.0;
    double mapping_ms = 0.0;
    double smoothing_ms = 0.0;

    double total() const { return rectify_ms + gray_ms + difference_ms + mapping_ms + smoothing_ms; }
};

/// Reference-bound reconstruction: rectify, crop, grayscale, difference,
/// depth mapping and smoothing for one contact frame at a time.
///
/// Frames may be raw camera frames (rectified and cropped here) or frames
/// already at crop size (used as they are).
class Pipeline
{
  public:
    Pipeline(PipelineConfig config, const GrayImage& reference);
    Pipeline(PipelineConfig config, const RgbImage& reference);

    DepthMap process(const GrayImage& contact, StageTimings* timings = nullptr) const;
    DepthMap process(const RgbImage& contact, StageTimings* timings = nullptr) const;

    /// Rectified, cropped grayscale frame.
    GrayImage prepare(const GrayImage& frame) const;
    GrayImage prepare(const RgbImage& frame) const;

    const GrayImage& reference() const { return reference_; }
    const PipelineConfig& config() const { return config_; }

  private:
    static GrayImage gray_reference(const PipelineConfig& config, const RgbImage& reference);
    DepthMap finish(const GrayImage& contact, StageTimings* timings) const;

    PipelineConfig config_;
    Rectifier rectifier_;
    GrayImage reference_;
    std::vector<double> slope_map_;  // regression method only
};

}  // namespace dtact::recon
