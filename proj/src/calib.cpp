#include "dtact/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>

#include <Eigen/Dense>

namespace dtact::calib {

namespace {

double sample_bilinear(const DifferenceImage& img, double u, double v)
{
    const int w = img.width();
    const int h = img.height();
    u = std::clamp(u, 0.0, static_cast<double>(w - 1));
    v = std::clamp(v, 0.0, static_cast<double>(h - 1));
    const int u0 = std::min(static_cast<int>(u), w - 1);
    const int v0 = std::min(static_cast<int>(v), h - 1);
    const int u1 = std::min(u0 + 1, w - 1);
    const int v1 = std::min(v0 + 1, h - 1);
    const double fu = u - u0;
    const double fv = v - v0;
    const double top = (1.0 - fu) * img.at(u0, v0) + fu * img.at(u1, v0);
    const double bottom = (1.0 - fu) * img.at(u0, v1) + fu * img.at(u1, v1);
    return (1.0 - fv) * top + fv * bottom;
}

// Largest 8-connected component of the mask, as pixel indices.
std::vector<std::size_t> largest_component(const std::vector<char>& mask, int width, int height)
{
    std::vector<char> seen(mask.size(), 0);
    std::vector<std::size_t> best;
    std::vector<std::size_t> current;
    std::queue<std::size_t> open;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || seen[start])
            continue;
        current.clear();
        seen[start] = 1;
        open.push(start);
        while (!open.empty()) {
            const std::size_t idx = open.front();
            open.pop();
            current.push_back(idx);
            const int u = static_cast<int>(idx % width);
            const int v = static_cast<int>(idx / width);
            for (int dv = -1; dv <= 1; ++dv) {
                for (int du = -1; du <= 1; ++du) {
                    const int nu = u + du;
                    const int nv = v + dv;
                    if (nu < 0 || nv < 0 || nu >= width || nv >= height)
                        continue;
                    const std::size_t n = static_cast<std::size_t>(nv) * width + nu;
                    if (mask[n] && !seen[n]) {
                        seen[n] = 1;
                        open.push(n);
                    }
                }
            }
        }
        if (current.size() > best.size())
            best = current;
    }
    return best;
}

// Kasa fit followed by one pass that drops points far from the first circle.
ContactCircle robust_circle(std::vector<Eigen::Vector2d> points)
{
    ContactCircle circle = fit_circle_kasa(points);
    std::vector<double> residuals;
    residuals.reserve(points.size());
    for (const auto& p : points)
        residuals.push_back(std::abs(std::hypot(p.x() - circle.center_u, p.y() - circle.center_v) - circle.radius));
    std::vector<double> sorted = residuals;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double mad = sorted[sorted.size() / 2];
    const double cutoff = std::max(3.0 * 1.4826 * mad, 0.75);
    std::vector<Eigen::Vector2d> kept;
    kept.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        if (residuals[i] <= cutoff)
            kept.push_back(points[i]);
    if (kept.size() >= 8 && kept.size() < points.size())
        circle = fit_circle_kasa(kept);
    return circle;
}

}  // namespace

GrayImage average_frames(std::span<const GrayImage> frames)
{
    if (frames.empty())
        throw ParameterError("average_frames needs at least one frame");
    const int w = frames.front().width();
    const int h = frames.front().height();
    std::vector<double> sum(frames.front().size(), 0.0);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].width() != w || frames[f].height() != h)
            throw ParameterError("frame " + std::to_string(f) + " differs in size from frame 0");
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum[i] += frames[f][i];
    }
    GrayImage out(w, h);
    const double n = static_cast<double>(frames.size());
    for (std::size_t i = 0; i < sum.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(sum[i] / n), 0.0, 255.0));
    return out;
}

ContactCircle fit_circle_kasa(std::span<const Eigen::Vector2d> points)
{
    if (points.size() < 3)
        throw InsufficientContactError("circle fit needs at least three points");
    // Center the data for conditioning, then solve
    //   x^2 + y^2 + D x + E y + F = 0
    // in the least-squares sense.
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : points)
        mean += p;
    mean /= static_cast<double>(points.size());

    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector2d q = p - mean;
        const Eigen::Vector3d row(q.x(), q.y(), 1.0);
        ata += row * row.transpose();
        atb += row * (-(q.x() * q.x() + q.y() * q.y()));
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(ata);
    const Eigen::Vector3d sol = ldlt.solve(atb);
    if (ldlt.info() != Eigen::Success || !sol.allFinite())
        throw InsufficientContactError("circle fit is degenerate");
    const double cu = -0.5 * sol(0);
    const double cv = -0.5 * sol(1);
    const double r_sq = cu * cu + cv * cv - sol(2);
    if (!(r_sq > 0.0))
        throw InsufficientContactError("circle fit is degenerate");
    // A collinear set gives a huge radius rather than a failed solve.
    double spread = 0.0;
    for (const auto& p : points)
        spread = std::max(spread, (p - mean).norm());
    if (std::sqrt(r_sq) > 1e6 * std::max(spread, 1e-12))
        throw InsufficientContactError("circle fit points are collinear");
    return {cu + mean.x(), cv + mean.y(), std::sqrt(r_sq)};
}

ContactCircle detect_contact_circle(const DifferenceImage& diff, const CircleDetectOptions& options)
{
    const int w = diff.width();
    const int h = diff.height();
    std::vector<char> mask(diff.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < diff.size(); ++i) {
        if (diff[i] >= options.threshold) {
            mask[i] = 1;
            any = true;
        }
    }
    if (!any)
        throw NoContactError("no pixel reaches the contact threshold");

    const auto blob = largest_component(mask, w, h);
    std::fill(mask.begin(), mask.end(), 0);
    for (auto idx : blob)
        mask[idx] = 1;

    std::vector<Eigen::Vector2d> boundary;
    for (auto idx : blob) {
        const int u = static_cast<int>(idx % w);
        const int v = static_cast<int>(idx / w);
        const bool edge = u == 0 || v == 0 || u == w - 1 || v == h - 1 || !mask[idx - 1] || !mask[idx + 1] ||
                          !mask[idx - w] || !mask[idx + w];
        if (edge)
            boundary.emplace_back(u, v);
    }
    if (boundary.size() < 8)
        throw InsufficientContactError("contact boundary has " + std::to_string(boundary.size()) +
                                       " pixels, need at least 8");

    const ContactCircle coarse = fit_circle_kasa(boundary);

    // Trace sub-pixel level crossings outward from the coarse center.
    const int levels = std::max(1, static_cast<int>(std::floor(options.threshold)));
    const double r_start = 0.5 * coarse.radius;
    const double r_end = 1.5 * coarse.radius + 10.0;
    constexpr double step = 0.25;
    std::vector<std::vector<Eigen::Vector2d>> crossings(static_cast<std::size_t>(levels));
    for (int k = 0; k < options.rays; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / options.rays;
        const double du = std::cos(angle);
        const double dv = std::sin(angle);
        double prev_r = r_start;
        double prev = sample_bilinear(diff, coarse.center_u + r_start * du, coarse.center_v + r_start * dv);
        // Highest level still to be crossed, walking outward.
        int pending = levels - 1;
        while (pending >= 0 && prev < pending + 0.5)
            --pending;
        for (double r = r_start + step; r <= r_end && pending >= 0; r += step) {
            const double u = coarse.center_u + r * du;
            const double v = coarse.center_v + r * dv;
            if (u < 0.0 || v < 0.0 || u > w - 1 || v > h - 1)
                break;
            const double value = sample_bilinear(diff, u, v);
            while (pending >= 0 && value < pending + 0.5) {
                const double level = pending + 0.5;
                const double t = (prev - level) / (prev - value);
                const double rc = prev_r + t * (r - prev_r);
                crossings[static_cast<std::size_t>(pending)].emplace_back(coarse.center_u + rc * du,
                                                                          coarse.center_v + rc * dv);
                --pending;
            }
            prev = value;
            prev_r = r;
        }
    }

    std::vector<double> level_values;
    std::vector<ContactCircle> circles;
    for (int k = 0; k < levels; ++k) {
        auto& pts = crossings[static_cast<std::size_t>(k)];
        if (static_cast<int>(pts.size()) < std::max(8, options.rays / 4))
            continue;
        try {
            circles.push_back(robust_circle(pts));
            level_values.push_back(k + 0.5);
        }
        catch (const InsufficientContactError&) {
        }
    }
    if (circles.empty())
        return coarse;
    if (circles.size() == 1) {
        // A single level sits half a gray level inside the edge; nothing to
        // extrapolate from.
        return circles.front();
    }

    const double n = static_cast<double>(circles.size());
    const double mean_level = std::accumulate(level_values.begin(), level_values.end(), 0.0) / n;
    double mean_radius = 0.0;
    ContactCircle out;
    for (const auto& c : circles) {
        mean_radius += c.radius;
        out.center_u += c.center_u;
        out.center_v += c.center_v;
    }
    mean_radius /= n;
    out.center_u /= n;
    out.center_v /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < circles.size(); ++i) {
        sxy += (level_values[i] - mean_level) * (circles[i].radius - mean_radius);
        sxx += (level_values[i] - mean_level) * (level_values[i] - mean_level);
    }
    const double slope = sxy / sxx;
    out.radius = mean_radius - slope * mean_level;
    // Radii shrink with level; a non-negative slope means the profile is
    // flat or noise dominated, so fall back to the lowest level.
    if (!(slope < 0.0) || !(out.radius > 0.0))
        return circles.front();
    return out;
}

double press_depth_from_contact_radius(double contact_radius_mm, double ball_radius)
{
    if (!(ball_radius > 0.0))
        throw ParameterError("ball radius must be positive");
    if (contact_radius_mm >= ball_radius)
        throw GeometryError("contact radius " + std::to_string(contact_radius_mm) + " mm is not smaller than ball radius " +
                            std::to_string(ball_radius) + " mm");
    return ball_radius - std::sqrt(ball_radius * ball_radius - contact_radius_mm * contact_radius_mm);
}

DepthMap analytic_ball_depth(const ContactCircle& circle, double ball_radius, const SensorGeometry& geom)
{
    const double a_mm = circle.radius * geom.pixelPitch();
    const double d_max = press_depth_from_contact_radius(a_mm, ball_radius);
    const double half = 0.5 * geom.cropSize();
    const SurfacePoint center{(circle.center_u - half) * geom.pixelPitch(), (circle.center_v - half) * geom.pixelPitch()};
    return spherical_cap(geom, ball_radius, d_max, center);
}

MappingList::MappingList() = default;

MappingList::MappingList(const std::array<double, kSize>& entries, int max_calibrated_index)
    : entries_(entries), max_calibrated_index_(max_calibrated_index)
{
    if (max_calibrated_index < 0 || max_calibrated_index >= kSize)
        throw ParameterError("max calibrated index out of range");
    if (entries_[0] != 0.0)
        throw ParameterError("mapping list entry 0 must be zero");
    for (double e : entries_)
        if (!std::isfinite(e))
            throw ParameterError("mapping list entries must be finite");
    if (!isMonotone())
        throw ParameterError("mapping list entries must be non-decreasing");
}

bool MappingList::isMonotone() const
{
    for (int i = 1; i < kSize; ++i)
        if (entries_[static_cast<std::size_t>(i)] < entries_[static_cast<std::size_t>(i - 1)])
            return false;
    return true;
}

std::vector<double> isotonic_fit(std::span<const double> values, std::span<const double> weights)
{
    if (values.size() != weights.size())
        throw ParameterError("isotonic_fit: values and weights differ in length");
    struct Block
    {
        double mean;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        blocks.push_back({values[i], weights[i], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
            const Block top = blocks.back();
            blocks.pop_back();
            Block& below = blocks.back();
            const double w = below.weight + top.weight;
            below.mean = w > 0.0 ? (below.mean * below.weight + top.mean * top.weight) / w
                                 : 0.5 * (below.mean + top.mean);
            below.weight = w;
            below.count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks)
        out.insert(out.end(), b.count, b.mean);
    return out;
}

MappingList build_mapping_list(const DifferenceImage& diff, const DepthMap& truth, const ContactCircle& circle)
{
    if (diff.width() != truth.width() || diff.height() != truth.height())
        throw ParameterError("difference image and truth depth differ in size");

    constexpr int kSize = MappingList::kSize;
    std::array<double, kSize> sum{};
    std::array<double, kSize> count{};
    std::size_t covered = 0;
    const double r_sq = circle.radius * circle.radius;
    for (int v = 0; v < diff.height(); ++v) {
        const double dv = v - circle.center_v;
        for (int u = 0; u < diff.width(); ++u) {
            const double du = u - circle.center_u;
            if (du * du + dv * dv > r_sq)
                continue;
            ++covered;
            const int level = diff.at(u, v);
            sum[static_cast<std::size_t>(level)] += truth.at(u, v);
            count[static_cast<std::size_t>(level)] += 1.0;
        }
    }
    if (covered < 32)
        throw InsufficientContactError("contact circle covers " + std::to_string(covered) +
                                       " pixels, need at least 32");

    int max_index = 0;
    for (int i = 1; i < kSize; ++i)
        if (count[static_cast<std::size_t>(i)] > 0.0)
            max_index = i;

    // Observed means; index 0 is pinned to zero depth.
    std::vector<double> values(static_cast<std::size_t>(max_index) + 1, 0.0);
    std::vector<double> weights(values.size(), 1.0);
    weights[0] = 1e12;
    int last_observed = 0;
    for (int i = 1; i <= max_index; ++i) {
        const auto si = static_cast<std::size_t>(i);
        if (count[si] == 0.0)
            continue;
        values[si] = sum[si] / count[si];
        weights[si] = count[si];
        // Fill the gap since the previous observed level.
        const double lo = values[static_cast<std::size_t>(last_observed)];
        for (int g = last_observed + 1; g < i; ++g) {
            const double t = static_cast<double>(g - last_observed) / (i - last_observed);
            values[static_cast<std::size_t>(g)] = lo + t * (values[si] - lo);
        }
        last_observed = i;
    }

    const auto fitted = isotonic_fit(values, weights);
    std::array<double, kSize> entries{};
    for (int i = 0; i < kSize; ++i)
        entries[static_cast<std::size_t>(i)] = fitted[static_cast<std::size_t>(std::min(i, max_index))];
    entries[0] = 0.0;
    return MappingList(entries, max_index);
}

double RegressionModel::slope(double u, double v) const
{
    return k_c * std::hypot(u - center_u, v - center_v) + b_c;
}

std::vector<CalibrationSample> collect_samples(const DifferenceImage& diff, const DepthMap& truth,
                                               const ContactCircle& circle, double center_u, double center_v)
{
    if (diff.width() != truth.width() || diff.height() != truth.height())
        throw ParameterError("difference image and truth depth differ in size");
    std::vector<CalibrationSample> samples;
    const double r_sq = circle.radius * circle.radius;
    for (int v = 0; v < diff.height(); ++v) {
        for (int u = 0; u < diff.width(); ++u) {
            const double du = u - circle.center_u;
            const double dv = v - circle.center_v;
            if (du * du + dv * dv > r_sq)
                continue;
            const int level = diff.at(u, v);
            const double depth = truth.at(u, v);
            if (level < 1 || !(depth > 0.0))
                continue;
            samples.push_back({static_cast<double>(level), depth, std::hypot(u - center_u, v - center_v)});
        }
    }
    return samples;
}

RegressionModel fit_regression(std::span<const CalibrationSample> samples, double center_u, double center_v,
                               int crop_size)
{
    if (samples.size() < 100)
        throw DegenerateFitError("regression needs at least 100 samples, got " + std::to_string(samples.size()));
    double mean_r = 0.0;
    double mean_s = 0.0;
    for (const auto& s : samples) {
        if (!(s.intensity_drop >= 1.0))
            throw ParameterError("calibration sample with zero intensity drop");
        if (!(s.depth > 0.0))
            throw ParameterError("calibration sample with non-positive depth");
        mean_r += s.radius;
        mean_s += s.depth / s.intensity_drop;
    }
    const double n = static_cast<double>(samples.size());
    mean_r /= n;
    mean_s /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& s : samples) {
        const double dr = s.radius - mean_r;
        sxx += dr * dr;
        sxy += dr * (s.depth / s.intensity_drop - mean_s);
    }
    if (!(sxx > 1e-12 * n * std::max(1.0, mean_r * mean_r)))
        throw DegenerateFitError("all calibration samples lie at one radius");

    RegressionModel model;
    model.k_c = sxy / sxx;
    model.b_c = mean_s - model.k_c * mean_r;
    model.center_u = center_u;
    model.center_v = center_v;

    if (crop_size > 0) {
        // The slope is affine in r, so its extremes over the crop sit at the
        // nearest crop point and the farthest corner.
        const double last = crop_size - 1;
        const double nu = std::clamp(center_u, 0.0, last);
        const double nv = std::clamp(center_v, 0.0, last);
        double r_max = 0.0;
        for (double cu : {0.0, last})
            for (double cv : {0.0, last})
                r_max = std::max(r_max, std::hypot(cu - center_u, cv - center_v));
        const double r_min = std::hypot(nu - center_u, nv - center_v);
        if (!(model.k_c * r_min + model.b_c > 0.0) || !(model.k_c * r_max + model.b_c > 0.0))
            throw DegenerateFitError("fitted slope is not positive over the whole crop");
    }
    return model;
}

}  // namespace dtact::calib
