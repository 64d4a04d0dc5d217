#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace dtact {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class NoContactError : public Error { using Error::Error; };
class InsufficientContactError : public Error { using Error::Error; };
class DegenerateFitError : public Error { using Error::Error; };
class DegenerateGeometryError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Rasters
// ---------------------------------------------------------------------------

struct Rgb
{
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major raster. The tag parameter keeps semantically different rasters
/// with the same pixel type (contact image vs. difference image) apart.
template <typename T, typename Tag = void>
class Image
{
  public:
    using value_type = T;

    Image() = default;

    Image(int width, int height, T fill = T{})
        : width_(checkedDim(width)), height_(checkedDim(height)),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill)
    {
    }

    Image(int width, int height, std::vector<T> data)
        : width_(checkedDim(width)), height_(checkedDim(height)), data_(std::move(data))
    {
        if (data_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
            throw ParameterError("image data length does not match width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int u, int v) { return data_[index(u, v)]; }
    const T& at(int u, int v) const { return data_[index(u, v)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    T* row(int v) { return data_.data() + static_cast<std::size_t>(v) * width_; }
    const T* row(int v) const { return data_.data() + static_cast<std::size_t>(v) * width_; }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    static int checkedDim(int n)
    {
        if (n < 0)
            throw ParameterError("negative image dimension");
        return n;
    }

    std::size_t index(int u, int v) const
    {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

struct DifferenceTag;
struct DepthTag;

using GrayImage = Image<std::uint8_t>;
using RgbImage = Image<Rgb>;
/// Per-pixel intensity drop from reference to contact frame, clamped at 0.
using DifferenceImage = Image<std::uint8_t, DifferenceTag>;
/// Pressed depth in mm on the sensing field.
using DepthMap = Image<double, DepthTag>;

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct SurfacePoint
{
    double x = 0.0;  // mm
    double y = 0.0;  // mm
};

/// Raw camera frame, centered crop window and the physical size of the
/// cropped sensing field.
class SensorGeometry
{
  public:
    SensorGeometry() : SensorGeometry(800, 600, 580, 24.0) {}
    SensorGeometry(int raw_width, int raw_height, int crop_size, double field_mm);

    int rawWidth() const { return raw_width_; }
    int rawHeight() const { return raw_height_; }
    int cropSize() const { return crop_size_; }
    double fieldMm() const { return field_mm_; }
    double pixelPitch() const { return field_mm_ / crop_size_; }

    /// Top-left corner of the centered crop window in raw-frame pixels.
    int cropOffsetU() const { return (raw_width_ - crop_size_) / 2; }
    int cropOffsetV() const { return (raw_height_ - crop_size_) / 2; }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;

  private:
    int raw_width_;
    int raw_height_;
    int crop_size_;
    double field_mm_;
};

/// Maps crop pixel coordinates to surface millimetres. The crop center maps
/// to the origin, x grows with u and y with v. Accepts the closed range
/// [0, crop_size] so the far field edge is addressable.
SurfacePoint pixel_to_surface(const SensorGeometry& geom, double u, double v);

/// Inverse of pixel_to_surface, without range checks.
Eigen::Vector2d surface_to_pixel(const SensorGeometry& geom, double x_mm, double y_mm);

/// Pinhole intrinsics plus Brown-Conrady distortion, in raw-frame pixels.
struct CameraModel
{
    double fx = 600.0;
    double fy = 600.0;
    double cx = 400.0;
    double cy = 300.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;

    void validate() const;
    bool hasDistortion() const { return k1 != 0.0 || k2 != 0.0 || k3 != 0.0 || p1 != 0.0 || p2 != 0.0; }

    /// Applies the forward distortion to normalized image coordinates.
    Eigen::Vector2d distortNormalized(const Eigen::Vector2d& p) const;

    friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct PlanarSurface
{
};

struct SphereSurface
{
    double radius = 20.0;          // mm
    Eigen::Vector3d center{0.0, 0.0, -20.0};
};

struct CylinderSurface
{
    double radius = 20.0;          // mm
    Eigen::Vector3d axis{0.0, 1.0, 0.0};
    Eigen::Vector3d axis_point{0.0, 0.0, -20.0};
};

using SurfaceShape = std::variant<PlanarSurface, SphereSurface, CylinderSurface>;

/// Throws ParameterError when radii are not positive or a cylinder axis is
/// not unit length to 1e-9.
void validate_shape(const SurfaceShape& shape);

using PointCloud = std::vector<Eigen::Vector3d>;

// ---------------------------------------------------------------------------
// Pixel primitives
// ---------------------------------------------------------------------------

/// BT.601 luma, rounded and clamped.
std::uint8_t luma(Rgb px);
GrayImage gray_from_rgb(const RgbImage& img);

struct MeanStd
{
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and population standard deviation of all pixels.
MeanStd image_mean_std(const GrayImage& img);

/// Spherical-cap indentation of a rigid ball, sampled at crop pixel centers.
/// Depth is d_max at the contact center and falls to zero at the contact
/// radius sqrt(2 R d - d^2).
DepthMap spherical_cap(const SensorGeometry& geom, double ball_radius, double d_max, SurfacePoint center);

/// Mean absolute difference, optionally restricted to a mask of equal size.
double mean_absolute_error(const DepthMap& a, const DepthMap& b);
double mean_absolute_error(const DepthMap& a, const DepthMap& b, const std::vector<bool>& mask);

}  // namespace dtact
