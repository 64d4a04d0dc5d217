#include "dtact/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace dtact::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool inside_hexagon(double x, double y, double apothem)
{
    for (int k = 0; k < 3; ++k) {
        const double a = k * 60.0 * kDeg;
        if (std::abs(x * std::cos(a) + y * std::sin(a)) > apothem)
            return false;
    }
    return true;
}

// Five-pointed star with one tip on +x; outer and inner vertex radii.
bool inside_star(double x, double y, double outer, double inner)
{
    const double rho = std::hypot(x, y);
    if (rho > outer)
        return false;
    if (rho <= inner * std::cos(36.0 * kDeg))
        return true;
    double phi = std::atan2(y, x) / kDeg;
    phi = std::fmod(phi + 360.0, 72.0);
    if (phi > 36.0)
        phi = 72.0 - phi;
    const double px = rho * std::cos(phi * kDeg);
    const double py = rho * std::sin(phi * kDeg);
    // Edge from the tip (outer, 0) to the valley at 36 degrees.
    const double vx = inner * std::cos(36.0 * kDeg);
    const double vy = inner * std::sin(36.0 * kDeg);
    const double cross = (vx - outer) * (py - 0.0) - (vy - 0.0) * (px - outer);
    // Origin lies on the positive side of the tip->valley edge.
    return cross >= 0.0;
}

struct Local
{
    double x;
    double y;
};

// Object-frame coordinates. The rotation is reduced modulo the object's
// symmetry order so symmetric poses render bit-identically.
Local to_local(double x, double y, const ObjectSpec& spec, double symmetry_deg)
{
    double rot = spec.rotation_deg;
    if (symmetry_deg > 0.0) {
        rot = std::fmod(rot, symmetry_deg);
        if (rot < 0.0)
            rot += symmetry_deg;
    }
    const double dx = x - spec.center.x;
    const double dy = y - spec.center.y;
    if (rot == 0.0)
        return {dx, dy};
    const double c = std::cos(-rot * kDeg);
    const double s = std::sin(-rot * kDeg);
    return {c * dx - s * dy, s * dx + c * dy};
}

double default_or(double value, double fallback) { return value > 0.0 ? value : fallback; }

}  // namespace

void OpticalModel::validate() const
{
    if (!(thickness > 0.0))
        throw ParameterError("layer thickness must be positive");
    if (!(attenuation > 0.0))
        throw ParameterError("attenuation rate must be positive");
    if (!(gain > 0.0))
        throw ParameterError("reflective gain must be positive");
    if (!(ambient >= 0.0))
        throw ParameterError("ambient offset must be non-negative");
    if (ambient + gain > 255.0)
        throw ParameterError("ambient + gain exceeds 255");
}

double OpticalModel::intensity(double depth_mm) const
{
    return ambient + gain * (1.0 - std::exp(-attenuation * (thickness - depth_mm)));
}

Scheme parse_scheme(std::string_view name)
{
    if (name == "standard")
        return Scheme::Standard;
    if (name == "s1" || name == "scheme1")
        return Scheme::Scheme1;
    if (name == "s2" || name == "scheme2")
        return Scheme::Scheme2;
    if (name == "s3" || name == "scheme3")
        return Scheme::Scheme3;
    if (name == "s4" || name == "scheme4")
        return Scheme::Scheme4;
    throw ParameterError("unknown illumination scheme '" + std::string(name) + "'");
}

std::string scheme_name(Scheme scheme)
{
    switch (scheme) {
    case Scheme::Standard: return "standard";
    case Scheme::Scheme1: return "s1";
    case Scheme::Scheme2: return "s2";
    case Scheme::Scheme3: return "s3";
    case Scheme::Scheme4: return "s4";
    }
    throw ParameterError("unknown illumination scheme");
}

std::vector<Eigen::Vector2d> led_positions(Scheme scheme, int crop_size)
{
    const double c = 0.5 * (crop_size - 1);
    const double ring = 0.45 * crop_size;
    auto on_ring = [&](double deg) { return Eigen::Vector2d(c + ring * std::cos(deg * kDeg), c + ring * std::sin(deg * kDeg)); };
    auto ring_led = [&](int k) { return on_ring(22.5 + 45.0 * k); };

    std::vector<Eigen::Vector2d> leds;
    switch (scheme) {
    case Scheme::Standard:
        for (int k = 0; k < 8; ++k)
            leds.push_back(ring_led(k));
        break;
    case Scheme::Scheme1:
        for (int k : {0, 1, 2, 3})
            leds.push_back(ring_led(k));
        break;
    case Scheme::Scheme2:
        for (int k : {0, 2, 4, 6})
            leds.push_back(ring_led(k));
        break;
    case Scheme::Scheme3:
        for (int k : {0, 1, 4, 5})
            leds.push_back(ring_led(k));
        break;
    case Scheme::Scheme4: {
        // Image y points down, so -45 degrees is the upper-right corner.
        const double reach = c * std::numbers::sqrt2;
        for (double off : {-16.875, -5.625, 5.625, 16.875}) {
            const double a = (-45.0 + off) * kDeg;
            leds.emplace_back(c + reach * std::cos(a), c + reach * std::sin(a));
        }
        break;
    }
    default:
        throw ParameterError("unknown illumination scheme");
    }
    return leds;
}

IlluminationField make_illumination(Scheme scheme, int crop_size, double led_sigma)
{
    if (crop_size <= 0)
        throw ParameterError("crop size must be positive");
    if (!(led_sigma > 0.0))
        throw ParameterError("LED footprint sigma must be positive");
    const auto leds = led_positions(scheme, crop_size);
    const double inv = 1.0 / (2.0 * led_sigma * led_sigma);

    IlluminationField field{Image<double>(crop_size, crop_size, 0.0), scheme};
    double peak = 0.0;
    for (int v = 0; v < crop_size; ++v) {
        for (int u = 0; u < crop_size; ++u) {
            double sum = 0.0;
            for (const auto& led : leds) {
                const double du = u - led.x();
                const double dv = v - led.y();
                sum += std::exp(-(du * du + dv * dv) * inv);
            }
            field.gain.at(u, v) = sum;
            peak = std::max(peak, sum);
        }
    }
    if (!(peak > 0.0))
        throw ParameterError("illumination field underflowed; LED sigma too small");
    for (auto& g : field.gain.data())
        g = std::max(g / peak, std::numeric_limits<double>::min());
    return field;
}

IlluminationField uniform_illumination(int crop_size)
{
    if (crop_size <= 0)
        throw ParameterError("crop size must be positive");
    return {Image<double>(crop_size, crop_size, 1.0), Scheme::Standard};
}

DepthMap sphere_press_depth(const SensorGeometry& geom, double ball_radius, double d_max, SurfacePoint center,
                            const OpticalModel& model)
{
    if (!(ball_radius > 0.0))
        throw ParameterError("ball radius must be positive");
    if (!(d_max > 0.0))
        throw ParameterError("press depth must be positive");
    if (d_max > ball_radius)
        throw ParameterError("press depth exceeds ball radius");
    if (d_max > model.thickness)
        throw ParameterError("press depth exceeds layer thickness");
    const double half = 0.5 * geom.fieldMm();
    if (std::abs(center.x) > half || std::abs(center.y) > half)
        throw ParameterError("press center outside the sensing field");
    return spherical_cap(geom, ball_radius, d_max, center);
}

GrayImage render_tactile(const DepthMap& depth, const OpticalModel& model, const IlluminationField& illum,
                         double noise_sigma, Rng& rng)
{
    if (depth.width() != illum.gain.width() || depth.height() != illum.gain.height())
        throw ParameterError("depth map and illumination field differ in size");
    GrayImage out(depth.width(), depth.height());
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
    const bool noisy = noise_sigma > 0.0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        double value = illum.gain[i] * model.intensity(depth[i]);
        if (noisy)
            value += noise(rng);
        out[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(value), 0.0, 255.0));
    }
    return out;
}

GrayImage render_tactile(const DepthMap& depth, const OpticalModel& model, const IlluminationField& illum)
{
    Rng unused(0);
    return render_tactile(depth, model, illum, 0.0, unused);
}

GrayImage render_reference(const OpticalModel& model, const IlluminationField& illum, double noise_sigma, Rng& rng,
                           int frames)
{
    const DepthMap flat(illum.gain.width(), illum.gain.height(), 0.0);
    if (frames <= 1 || noise_sigma <= 0.0)
        return render_tactile(flat, model, illum, noise_sigma, rng);
    std::vector<double> sum(flat.size(), 0.0);
    for (int f = 0; f < frames; ++f) {
        const auto img = render_tactile(flat, model, illum, noise_sigma, rng);
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum[i] += img[i];
    }
    GrayImage out(flat.width(), flat.height());
    for (std::size_t i = 0; i < sum.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(sum[i] / frames), 0.0, 255.0));
    return out;
}

ObjectKind parse_object_kind(std::string_view name)
{
    if (name == "ball_array" || name == "ballarray")
        return ObjectKind::BallArray;
    if (name == "star")
        return ObjectKind::Star;
    if (name == "hex_nut" || name == "hexnut" || name == "nut")
        return ObjectKind::HexNut;
    if (name == "set_screw" || name == "setscrew")
        return ObjectKind::SetScrew;
    if (name == "slab")
        return ObjectKind::Slab;
    throw ParameterError("unknown object kind '" + std::string(name) + "'");
}

std::string object_kind_name(ObjectKind kind)
{
    switch (kind) {
    case ObjectKind::BallArray: return "ball_array";
    case ObjectKind::Star: return "star";
    case ObjectKind::HexNut: return "hex_nut";
    case ObjectKind::SetScrew: return "set_screw";
    case ObjectKind::Slab: return "slab";
    }
    throw ParameterError("unknown object kind");
}

double object_extent(const ObjectSpec& spec)
{
    switch (spec.kind) {
    case ObjectKind::Slab:
        return default_or(spec.size, 8.0) * std::numbers::sqrt2 / 2.0;
    case ObjectKind::BallArray:
        return default_or(spec.size, 6.0) * std::numbers::sqrt2 + default_or(spec.diameter, 3.0) / 2.0;
    case ObjectKind::Star:
        return default_or(spec.size, 12.0) / 2.0;
    case ObjectKind::HexNut:
        return default_or(spec.size, 8.0) / std::numbers::sqrt3;
    case ObjectKind::SetScrew:
        return default_or(spec.diameter, 3.0) / 2.0;
    }
    throw ParameterError("unknown object kind");
}

DepthMap synth_object_depth(const ObjectSpec& spec, const SensorGeometry& geom, const OpticalModel& model)
{
    if (!(spec.depth >= 0.0))
        throw ParameterError("object depth must be non-negative");
    const int n = geom.cropSize();
    const double pitch = geom.pixelPitch();
    const double half = 0.5 * n;
    const double cap = model.thickness;
    DepthMap depth(n, n, 0.0);

    auto fill = [&](auto&& profile) {
        for (int v = 0; v < n; ++v) {
            const double y = (v - half) * pitch;
            for (int u = 0; u < n; ++u) {
                const double x = (u - half) * pitch;
                depth.at(u, v) = std::clamp(profile(x, y), 0.0, cap);
            }
        }
    };

    switch (spec.kind) {
    case ObjectKind::Slab: {
        const double side = default_or(spec.size, 8.0) / 2.0;
        fill([&](double x, double y) {
            const auto p = to_local(x, y, spec, 90.0);
            return (std::abs(p.x) <= side && std::abs(p.y) <= side) ? spec.depth : 0.0;
        });
        break;
    }
    case ObjectKind::BallArray: {
        const double pitch_mm = default_or(spec.size, 6.0);
        const double r = default_or(spec.diameter, 3.0) / 2.0;
        const double d = std::min(spec.depth, r);
        const double a_sq = 2.0 * r * d - d * d;
        fill([&](double x, double y) {
            const auto p = to_local(x, y, spec, 90.0);
            double best = 0.0;
            for (int i = -1; i <= 1; ++i) {
                for (int j = -1; j <= 1; ++j) {
                    const double dx = p.x - i * pitch_mm;
                    const double dy = p.y - j * pitch_mm;
                    const double rho_sq = dx * dx + dy * dy;
                    if (rho_sq <= a_sq)
                        best = std::max(best, d - r + std::sqrt(r * r - rho_sq));
                }
            }
            return best;
        });
        break;
    }
    case ObjectKind::Star: {
        const double outer = default_or(spec.size, 12.0) / 2.0;
        const double inner = 0.45 * outer;
        fill([&](double x, double y) {
            const auto p = to_local(x, y, spec, 72.0);
            return inside_star(p.x, p.y, outer, inner) ? spec.depth : 0.0;
        });
        break;
    }
    case ObjectKind::HexNut: {
        const double apothem = default_or(spec.size, 8.0) / 2.0;
        const double hole = default_or(spec.diameter, 5.0) / 2.0;
        fill([&](double x, double y) {
            const auto p = to_local(x, y, spec, 60.0);
            if (p.x * p.x + p.y * p.y < hole * hole)
                return 0.0;
            return inside_hexagon(p.x, p.y, apothem) ? spec.depth : 0.0;
        });
        break;
    }
    case ObjectKind::SetScrew: {
        const double radius = default_or(spec.diameter, 3.0) / 2.0;
        const double socket = 0.25 * 2.0 * radius;
        fill([&](double x, double y) {
            const auto p = to_local(x, y, spec, 60.0);
            if (p.x * p.x + p.y * p.y > radius * radius)
                return 0.0;
            return inside_hexagon(p.x, p.y, socket / 2.0) ? 0.0 : spec.depth;
        });
        break;
    }
    }
    return depth;
}

std::vector<SequenceFrame> render_sequence(const ObjectSpec& object, const std::vector<Pose>& trajectory,
                                           const SensorGeometry& geom, const OpticalModel& model,
                                           const IlluminationField& illum, double noise_sigma, Rng& rng)
{
    std::vector<SequenceFrame> frames;
    frames.reserve(trajectory.size());
    const double half_field = 0.5 * geom.fieldMm();
    for (const auto& pose : trajectory) {
        ObjectSpec moved = object;
        // Snap to 1e-9 degrees so e.g. 12 x 5 degrees lands exactly on 60.
        const double yaw = std::round(pose.yawDegrees() * 1e9) / 1e9;
        moved.rotation_deg = object.rotation_deg + yaw;
        moved.center.x = object.center.x + pose.translation.x();
        moved.center.y = object.center.y + pose.translation.y();

        SequenceFrame frame;
        frame.pose = pose;
        const double reach = object_extent(moved);
        frame.out_of_field = std::abs(moved.center.x) + reach > half_field ||
                             std::abs(moved.center.y) + reach > half_field;
        frame.truth = synth_object_depth(moved, geom, model);
        frame.image = render_tactile(frame.truth, model, illum, noise_sigma, rng);
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace dtact::sim
