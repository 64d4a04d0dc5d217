#include "dtact/core.hpp"

#include <algorithm>
#include <cmath>

namespace dtact {

SensorGeometry::SensorGeometry(int raw_width, int raw_height, int crop_size, double field_mm)
    : raw_width_(raw_width), raw_height_(raw_height), crop_size_(crop_size), field_mm_(field_mm)
{
    if (crop_size <= 0 || raw_width <= 0 || raw_height <= 0)
        throw ParameterError("sensor dimensions must be positive");
    if (crop_size > raw_width || crop_size > raw_height)
        throw ParameterError("crop window does not fit inside the raw frame");
    if (!(field_mm > 0.0) || !std::isfinite(field_mm))
        throw ParameterError("field size must be positive");
}

SurfacePoint pixel_to_surface(const SensorGeometry& geom, double u, double v)
{
    const double n = geom.cropSize();
    if (!(u >= 0.0 && u <= n && v >= 0.0 && v <= n))
        throw BoundsError("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside the crop window");
    const double half = 0.5 * n;
    return {(u - half) * geom.pixelPitch(), (v - half) * geom.pixelPitch()};
}

Eigen::Vector2d surface_to_pixel(const SensorGeometry& geom, double x_mm, double y_mm)
{
    const double half = 0.5 * geom.cropSize();
    return {x_mm / geom.pixelPitch() + half, y_mm / geom.pixelPitch() + half};
}

void CameraModel::validate() const
{
    if (!(fx > 0.0) || !(fy > 0.0))
        throw ParameterError("camera focal lengths must be positive");
}

Eigen::Vector2d CameraModel::distortNormalized(const Eigen::Vector2d& p) const
{
    const double x = p.x();
    const double y = p.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
            y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

void validate_shape(const SurfaceShape& shape)
{
    if (const auto* s = std::get_if<SphereSurface>(&shape)) {
        if (!(s->radius > 0.0))
            throw ParameterError("sphere radius must be positive");
    }
    else if (const auto* c = std::get_if<CylinderSurface>(&shape)) {
        if (!(c->radius > 0.0))
            throw ParameterError("cylinder radius must be positive");
        if (std::abs(c->axis.norm() - 1.0) > 1e-9)
            throw ParameterError("cylinder axis must be unit length");
    }
}

std::uint8_t luma(Rgb px)
{
    const double y = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

GrayImage gray_from_rgb(const RgbImage& img)
{
    GrayImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = luma(img[i]);
    return out;
}

MeanStd image_mean_std(const GrayImage& img)
{
    if (img.empty())
        throw ParameterError("image_mean_std of an empty image");
    double sum = 0.0;
    for (auto px : img.data())
        sum += px;
    const double mean = sum / static_cast<double>(img.size());
    double sq = 0.0;
    for (auto px : img.data()) {
        const double d = px - mean;
        sq += d * d;
    }
    return {mean, std::sqrt(sq / static_cast<double>(img.size()))};
}

DepthMap spherical_cap(const SensorGeometry& geom, double ball_radius, double d_max, SurfacePoint center)
{
    const int n = geom.cropSize();
    DepthMap depth(n, n, 0.0);
    if (d_max <= 0.0)
        return depth;
    const double r_sq = ball_radius * ball_radius;
    const double a_sq = 2.0 * ball_radius * d_max - d_max * d_max;
    const double pitch = geom.pixelPitch();
    const double half = 0.5 * n;
    for (int v = 0; v < n; ++v) {
        const double dy = (v - half) * pitch - center.y;
        for (int u = 0; u < n; ++u) {
            const double dx = (u - half) * pitch - center.x;
            const double rho_sq = dx * dx + dy * dy;
            if (rho_sq <= a_sq)
                depth.at(u, v) = std::max(0.0, d_max - ball_radius + std::sqrt(r_sq - rho_sq));
        }
    }
    return depth;
}

double mean_absolute_error(const DepthMap& a, const DepthMap& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw ParameterError("depth maps differ in size");
    if (a.empty())
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
}

double mean_absolute_error(const DepthMap& a, const DepthMap& b, const std::vector<bool>& mask)
{
    if (a.width() != b.width() || a.height() != b.height() || mask.size() != a.size())
        throw ParameterError("depth maps or mask differ in size");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask[i])
            continue;
        sum += std::abs(a[i] - b[i]);
        ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace dtact
