#include "dtact/recon.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>

namespace dtact::recon {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Source position (raw pixels) seen by an undistorted output pixel.
Eigen::Vector2d distorted_source(const CameraModel& cam, double u, double v)
{
    const Eigen::Vector2d norm((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy);
    const Eigen::Vector2d d = cam.distortNormalized(norm);
    return {cam.fx * d.x() + cam.cx, cam.fy * d.y() + cam.cy};
}

template <typename Pixel>
Image<Pixel> undistort_impl(const Image<Pixel>& img, const CameraModel& cam)
{
    cam.validate();
    if (!cam.hasDistortion() || img.empty())
        return img;
    const int w = img.width();
    const int h = img.height();
    Image<Pixel> out(w, h);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const Eigen::Vector2d src = distorted_source(cam, u, v);
            const double su = std::clamp(src.x(), 0.0, static_cast<double>(w - 1));
            const double sv = std::clamp(src.y(), 0.0, static_cast<double>(h - 1));
            const int u0 = std::min(static_cast<int>(su), w - 1);
            const int v0 = std::min(static_cast<int>(sv), h - 1);
            const int u1 = std::min(u0 + 1, w - 1);
            const int v1 = std::min(v0 + 1, h - 1);
            const double fu = su - u0;
            const double fv = sv - v0;
            auto lerp = [&](double a, double b, double c, double d) {
                const double top = (1.0 - fu) * a + fu * b;
                const double bottom = (1.0 - fu) * c + fu * d;
                return static_cast<std::uint8_t>(std::clamp(std::nearbyint((1.0 - fv) * top + fv * bottom), 0.0, 255.0));
            };
            if constexpr (std::is_same_v<Pixel, Rgb>) {
                const Rgb a = img.at(u0, v0), b = img.at(u1, v0), c = img.at(u0, v1), d = img.at(u1, v1);
                out.at(u, v) = Rgb{lerp(a.r, b.r, c.r, d.r), lerp(a.g, b.g, c.g, d.g), lerp(a.b, b.b, c.b, d.b)};
            }
            else {
                out.at(u, v) = lerp(img.at(u0, v0), img.at(u1, v0), img.at(u0, v1), img.at(u1, v1));
            }
        }
    }
    return out;
}

// reflect-101 index into [0, n)
int reflect(int i, int n)
{
    if (n == 1)
        return 0;
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i;
        if (i >= n)
            i = 2 * (n - 1) - i;
    }
    return i;
}

void convolve_rows(const std::vector<double>& src, std::vector<double>& dst, int w, int h,
                   const std::vector<double>& taps)
{
    const int radius = static_cast<int>(taps.size()) / 2;
    std::vector<double> line(static_cast<std::size_t>(w + 2 * radius));
    for (int v = 0; v < h; ++v) {
        const double* row = src.data() + static_cast<std::size_t>(v) * w;
        for (int i = -radius; i < w + radius; ++i)
            line[static_cast<std::size_t>(i + radius)] = row[reflect(i, w)];
        double* out = dst.data() + static_cast<std::size_t>(v) * w;
        for (int u = 0; u < w; ++u) {
            double acc = 0.0;
            for (std::size_t k = 0; k < taps.size(); ++k)
                acc += taps[k] * line[static_cast<std::size_t>(u) + k];
            out[u] = acc;
        }
    }
}

void convolve_cols(const std::vector<double>& src, std::vector<double>& dst, int w, int h,
                   const std::vector<double>& taps)
{
    const int radius = static_cast<int>(taps.size()) / 2;
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t k = 0; k < taps.size(); ++k) {
        const int offset = static_cast<int>(k) - radius;
        const double t = taps[k];
        for (int v = 0; v < h; ++v) {
            const double* in = src.data() + static_cast<std::size_t>(reflect(v + offset, h)) * w;
            double* out = dst.data() + static_cast<std::size_t>(v) * w;
            for (int u = 0; u < w; ++u)
                out[u] += t * in[u];
        }
    }
}

std::optional<double> first_hit(const SurfaceShape& shape, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir)
{
    // Smallest positive root of a t^2 + 2 b t + c = 0.
    auto smallest_positive = [](double a, double b, double c) -> std::optional<double> {
        const double disc = b * b - a * c;
        if (disc < 0.0 || a <= 0.0)
            return std::nullopt;
        const double s = std::sqrt(disc);
        const double t0 = (-b - s) / a;
        const double t1 = (-b + s) / a;
        if (t0 > 0.0)
            return t0;
        if (t1 > 0.0)
            return t1;
        return std::nullopt;
    };

    if (const auto* sphere = std::get_if<SphereSurface>(&shape)) {
        const Eigen::Vector3d oc = origin - sphere->center;
        return smallest_positive(dir.squaredNorm(), oc.dot(dir), oc.squaredNorm() - sphere->radius * sphere->radius);
    }
    if (const auto* cyl = std::get_if<CylinderSurface>(&shape)) {
        const Eigen::Vector3d oc = origin - cyl->axis_point;
        const Eigen::Vector3d d_perp = dir - dir.dot(cyl->axis) * cyl->axis;
        const Eigen::Vector3d oc_perp = oc - oc.dot(cyl->axis) * cyl->axis;
        return smallest_positive(d_perp.squaredNorm(), oc_perp.dot(d_perp),
                                 oc_perp.squaredNorm() - cyl->radius * cyl->radius);
    }
    return std::nullopt;
}

}  // namespace

void PipelineConfig::validate() const
{
    camera.validate();
    if (gaussian_kernel <= 0 || gaussian_kernel % 2 == 0)
        throw ParameterError("Gaussian kernel size must be odd and positive");
    if (gaussian_passes < 0)
        throw ParameterError("Gaussian pass count must be non-negative");
    if (!(gaussian_sigma > 0.0))
        throw ParameterError("Gaussian sigma must be positive");
    if (!(depth_clamp > 0.0))
        throw ParameterError("depth clamp must be positive");
}

GrayImage undistort(const GrayImage& img, const CameraModel& cam) { return undistort_impl(img, cam); }

RgbImage undistort(const RgbImage& img, const CameraModel& cam) { return undistort_impl(img, cam); }

DifferenceImage difference(const GrayImage& reference, const GrayImage& contact)
{
    if (reference.width() != contact.width() || reference.height() != contact.height())
        throw ParameterError("reference and contact images differ in size");
    DifferenceImage out(reference.width(), reference.height());
    for (std::size_t i = 0; i < reference.size(); ++i)
        out[i] = reference[i] > contact[i] ? static_cast<std::uint8_t>(reference[i] - contact[i]) : 0;
    return out;
}

DepthMap map_depth(const DifferenceImage& diff, const PipelineConfig& config)
{
    DepthMap depth(diff.width(), diff.height(), 0.0);
    const double clamp = config.depth_clamp;
    if (const auto* table = std::get_if<calib::MappingList>(&config.method)) {
        for (std::size_t i = 0; i < diff.size(); ++i)
            depth[i] = std::clamp((*table)(diff[i]), 0.0, clamp);
    }
    else {
        const auto& model = std::get<calib::RegressionModel>(config.method);
        for (int v = 0; v < diff.height(); ++v)
            for (int u = 0; u < diff.width(); ++u)
                depth.at(u, v) = std::clamp(model.depth(u, v, diff.at(u, v)), 0.0, clamp);
    }
    return depth;
}

std::vector<double> gaussian_kernel(int size, double sigma)
{
    if (size <= 0 || size % 2 == 0)
        throw ParameterError("Gaussian kernel size must be odd and positive");
    if (!(sigma > 0.0))
        throw ParameterError("Gaussian sigma must be positive");
    const int radius = size / 2;
    std::vector<double> taps(static_cast<std::size_t>(size));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double t = std::exp(-(i * i) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(i + radius)] = t;
        sum += t;
    }
    for (auto& t : taps)
        t /= sum;
    return taps;
}

DepthMap gaussian_denoise(const DepthMap& depth, const PipelineConfig& config)
{
    if (config.gaussian_passes == 0 || depth.empty())
        return depth;
    const auto taps = gaussian_kernel(config.gaussian_kernel, config.gaussian_sigma);
    const int w = depth.width();
    const int h = depth.height();
    if (config.gaussian_kernel / 2 >= std::min(w, h) && std::min(w, h) > 1)
        throw ParameterError("Gaussian kernel does not fit the depth map");
    std::vector<double> a = depth.data();
    std::vector<double> b(a.size());
    for (int pass = 0; pass < config.gaussian_passes; ++pass) {
        convolve_rows(a, b, w, h, taps);
        convolve_cols(b, a, w, h, taps);
    }
    return DepthMap(w, h, std::move(a));
}

PointCloud depth_to_pointcloud(const DepthMap& depth, const SensorGeometry& geom, double min_depth)
{
    if (depth.width() != geom.cropSize() || depth.height() != geom.cropSize())
        throw ParameterError("depth map does not match the sensor crop size");
    PointCloud cloud;
    cloud.reserve(min_depth < 0.0 ? depth.size() : depth.size() / 8);
    for (int v = 0; v < depth.height(); ++v) {
        for (int u = 0; u < depth.width(); ++u) {
            const double d = depth.at(u, v);
            if (min_depth >= 0.0 && !(d > min_depth))
                continue;
            const auto p = pixel_to_surface(geom, u, v);
            cloud.emplace_back(p.x, p.y, -d);
        }
    }
    return cloud;
}

RaycastResult raycast_project(const DepthMap& depth, const SurfaceShape& shape, const CameraModel& cam,
                              const SensorGeometry& geom)
{
    validate_shape(shape);
    cam.validate();
    if (std::holds_alternative<PlanarSurface>(shape))
        return {depth_to_pointcloud(depth, geom), 0};
    if (depth.width() != geom.cropSize() || depth.height() != geom.cropSize())
        throw ParameterError("depth map does not match the sensor crop size");

    const Eigen::Vector3d origin(0.0, 0.0, -cam.fx * geom.pixelPitch());
    RaycastResult result;
    result.points.reserve(depth.size());
    for (int v = 0; v < depth.height(); ++v) {
        for (int u = 0; u < depth.width(); ++u) {
            const auto p = pixel_to_surface(geom, u, v);
            const Eigen::Vector3d dir = (Eigen::Vector3d(p.x, p.y, 0.0) - origin).normalized();
            const auto t = first_hit(shape, origin, dir);
            if (!t) {
                ++result.missed;
                continue;
            }
            result.points.push_back(origin + (*t - depth.at(u, v)) * dir);
        }
    }
    return result;
}

Rectifier::Rectifier(const CameraModel& cam, const SensorGeometry& geom)
    : geom_(geom), identity_(!cam.hasDistortion())
{
    cam.validate();
    if (identity_)
        return;
    const int n = geom.cropSize();
    const int w = geom.rawWidth();
    const int h = geom.rawHeight();
    const int ou = geom.cropOffsetU();
    const int ov = geom.cropOffsetV();
    taps_.reserve(static_cast<std::size_t>(n) * n);
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            const Eigen::Vector2d src = distorted_source(cam, u + ou, v + ov);
            const double su = std::clamp(src.x(), 0.0, static_cast<double>(w - 1));
            const double sv = std::clamp(src.y(), 0.0, static_cast<double>(h - 1));
            const int u0 = std::min(static_cast<int>(su), w - 1);
            const int v0 = std::min(static_cast<int>(sv), h - 1);
            Tap tap;
            tap.index = v0 * w + u0;
            tap.step_u = u0 + 1 < w ? 1 : 0;
            tap.step_v = v0 + 1 < h ? w : 0;
            tap.wu = static_cast<float>(su - u0);
            tap.wv = static_cast<float>(sv - v0);
            taps_.push_back(tap);
        }
    }
}

template <typename Pixel>
void Rectifier::check(const Image<Pixel>& raw) const
{
    if (raw.width() != geom_.rawWidth() || raw.height() != geom_.rawHeight())
        throw ParameterError("frame is " + std::to_string(raw.width()) + "x" + std::to_string(raw.height()) +
                             ", expected the raw " + std::to_string(geom_.rawWidth()) + "x" +
                             std::to_string(geom_.rawHeight()));
}

GrayImage Rectifier::apply(const GrayImage& raw) const
{
    check(raw);
    if (identity_)
        return crop_center(raw, geom_);
    const int n = geom_.cropSize();
    GrayImage out(n, n);
    const auto* src = raw.data().data();
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        const Tap& t = taps_[i];
        const float a = src[t.index];
        const float b = src[t.index + t.step_u];
        const float c = src[t.index + t.step_v];
        const float d = src[t.index + t.step_v + t.step_u];
        const float top = a + t.wu * (b - a);
        const float bottom = c + t.wu * (d - c);
        out[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(top + t.wv * (bottom - top)), 0.0f, 255.0f));
    }
    return out;
}

RgbImage Rectifier::apply(const RgbImage& raw) const
{
    check(raw);
    if (identity_)
        return crop_center(raw, geom_);
    const int n = geom_.cropSize();
    RgbImage out(n, n);
    const auto* src = raw.data().data();
    auto channel = [](const Tap& t, float a, float b, float c, float d) {
        const float top = a + t.wu * (b - a);
        const float bottom = c + t.wu * (d - c);
        return static_cast<std::uint8_t>(std::clamp(std::nearbyint(top + t.wv * (bottom - top)), 0.0f, 255.0f));
    };
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        const Tap& t = taps_[i];
        const Rgb& a = src[t.index];
        const Rgb& b = src[t.index + t.step_u];
        const Rgb& c = src[t.index + t.step_v];
        const Rgb& d = src[t.index + t.step_v + t.step_u];
        out[i] = Rgb{channel(t, a.r, b.r, c.r, d.r), channel(t, a.g, b.g, c.g, d.g), channel(t, a.b, b.b, c.b, d.b)};
    }
    return out;
}

Pipeline::Pipeline(PipelineConfig config, const GrayImage& reference)
    : config_(std::move(config)), rectifier_(config_.camera, config_.geom)
{
    config_.validate();
    reference_ = prepare(reference);
    if (const auto* model = std::get_if<calib::RegressionModel>(&config_.method)) {
        const int n = config_.geom.cropSize();
        slope_map_.resize(static_cast<std::size_t>(n) * n);
        for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
                slope_map_[static_cast<std::size_t>(v) * n + u] = model->slope(u, v);
    }
}

Pipeline::Pipeline(PipelineConfig config, const RgbImage& reference)
    : Pipeline(config, gray_reference(config, reference))
{
}

GrayImage Pipeline::gray_reference(const PipelineConfig& config, const RgbImage& reference)
{
    const int n = config.geom.cropSize();
    if (reference.width() == n && reference.height() == n)
        return gray_from_rgb(reference);
    return gray_from_rgb(Rectifier(config.camera, config.geom).apply(reference));
}

GrayImage Pipeline::prepare(const GrayImage& frame) const
{
    const int n = config_.geom.cropSize();
    if (frame.width() == n && frame.height() == n)
        return frame;
    return rectifier_.apply(frame);
}

GrayImage Pipeline::prepare(const RgbImage& frame) const
{
    const int n = config_.geom.cropSize();
    if (frame.width() == n && frame.height() == n)
        return gray_from_rgb(frame);
    return gray_from_rgb(rectifier_.apply(frame));
}

DepthMap Pipeline::process(const GrayImage& contact, StageTimings* timings) const
{
    const auto t0 = Clock::now();
    const GrayImage cropped = prepare(contact);
    if (timings)
        timings->rectify_ms = elapsed_ms(t0);
    return finish(cropped, timings);
}

DepthMap Pipeline::process(const RgbImage& contact, StageTimings* timings) const
{
    const int n = config_.geom.cropSize();
    auto t0 = Clock::now();
    const RgbImage cropped = (contact.width() == n && contact.height() == n) ? contact : rectifier_.apply(contact);
    if (timings)
        timings->rectify_ms = elapsed_ms(t0);
    t0 = Clock::now();
    const GrayImage gray = gray_from_rgb(cropped);
    if (timings)
        timings->gray_ms = elapsed_ms(t0);
    return finish(gray, timings);
}

DepthMap Pipeline::finish(const GrayImage& contact, StageTimings* timings) const
{
    auto t0 = Clock::now();
    const DifferenceImage diff = difference(reference_, contact);
    if (timings)
        timings->difference_ms = elapsed_ms(t0);

    t0 = Clock::now();
    DepthMap depth(diff.width(), diff.height(), 0.0);
    const double clamp = config_.depth_clamp;
    if (const auto* table = std::get_if<calib::MappingList>(&config_.method)) {
        std::array<double, calib::MappingList::kSize> lut{};
        for (int i = 0; i < calib::MappingList::kSize; ++i)
            lut[static_cast<std::size_t>(i)] = std::clamp((*table)(i), 0.0, clamp);
        for (std::size_t i = 0; i < diff.size(); ++i)
            depth[i] = lut[diff[i]];
    }
    else {
        for (std::size_t i = 0; i < diff.size(); ++i)
            depth[i] = std::clamp(slope_map_[i] * diff[i], 0.0, clamp);
    }
    if (timings)
        timings->mapping_ms = elapsed_ms(t0);

    t0 = Clock::now();
    DepthMap smoothed = gaussian_denoise(depth, config_);
    if (timings)
        timings->smoothing_ms = elapsed_ms(t0);
    return smoothed;
}

}  // namespace dtact::recon
