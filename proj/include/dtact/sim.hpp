#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dtact/core.hpp"
#include "dtact/rigid.hpp"

/// Forward model of the sensor: depth field in, grayscale tactile image out.
///
/// The reflected intensity of the semitransparent layer is modelled as a
/// saturating function of the remaining layer thickness t = T - D:
///
///     I(t) = g(u,v) * (C + A * (1 - exp(-beta * t)))
///
/// where g is the normalized LED illumination field. The law is a stand-in
/// (the real elastomer optics are not characterized quantitatively); it is
/// monotone in D, which is all the calibration methods rely on, and
/// deliberately nonlinear.
namespace dtact::sim {

using Rng = std::mt19937_64;

struct OpticalModel
{
    double thickness = 2.0;     // T, mm
    double attenuation = 1.2;   // beta, 1/mm
    double gain = 180.0;        // A, gray levels
    double ambient = 10.0;      // C, gray levels

    void validate() const;

    /// Pre-illumination, pre-rounding intensity at pressed depth D.
    double intensity(double depth_mm) const;
};

enum class Scheme
{
    Standard,
    Scheme1,
    Scheme2,
    Scheme3,
    Scheme4,
};

inline constexpr Scheme kAllSchemes[] = {Scheme::Standard, Scheme::Scheme1, Scheme::Scheme2, Scheme::Scheme3,
                                         Scheme::Scheme4};

/// "standard", "s1".."s4" (also accepts "scheme1".."scheme4").
Scheme parse_scheme(std::string_view name);
std::string scheme_name(Scheme scheme);

inline constexpr double kDefaultLedSigma = 850.0;

struct IlluminationField
{
    Image<double> gain;   // (0, 1], max exactly 1
    Scheme scheme = Scheme::Standard;
};

/// LED positions in crop pixels for a scheme.
std::vector<Eigen::Vector2d> led_positions(Scheme scheme, int crop_size);

/// Sum of isotropic Gaussian LED footprints, normalized to a maximum of one.
///
/// Standard lights all eight LEDs of a ring of radius 0.45 * crop_size.
/// Scheme1 lights four adjacent ring LEDs, Scheme2 every other one, Scheme3
/// two opposing adjacent pairs. Scheme4 packs four LEDs into a 45 degree arc
/// aimed at the upper-right corner of the crop, which darkens the image
/// toward the lower left.
IlluminationField make_illumination(Scheme scheme, int crop_size, double led_sigma = kDefaultLedSigma);

/// All-ones field.
IlluminationField uniform_illumination(int crop_size);

/// Ground-truth indentation of a ball of radius R pressed d_max deep with
/// its apex at `center` (surface mm). Requires 0 < d_max <= min(R, T).
DepthMap sphere_press_depth(const SensorGeometry& geom, double ball_radius, double d_max, SurfacePoint center,
                            const OpticalModel& model);

/// Renders a crop-size tactile image. noise_sigma > 0 draws additive
/// Gaussian noise from `rng` before rounding.
GrayImage render_tactile(const DepthMap& depth, const OpticalModel& model, const IlluminationField& illum,
                         double noise_sigma, Rng& rng);
GrayImage render_tactile(const DepthMap& depth, const OpticalModel& model, const IlluminationField& illum);

/// Renders the unpressed reference, averaged over `frames` noisy renders.
GrayImage render_reference(const OpticalModel& model, const IlluminationField& illum, double noise_sigma, Rng& rng,
                           int frames = 1);

/// Places a crop-size image at the center of a raw camera frame, replicating
/// edge pixels into the margin.
template <typename T, typename Tag>
Image<T, Tag> embed_in_frame(const Image<T, Tag>& crop, const SensorGeometry& geom)
{
    Image<T, Tag> raw(geom.rawWidth(), geom.rawHeight());
    const int ou = geom.cropOffsetU();
    const int ov = geom.cropOffsetV();
    const int n = crop.width();
    for (int v = 0; v < raw.height(); ++v) {
        const int sv = std::clamp(v - ov, 0, crop.height() - 1);
        for (int u = 0; u < raw.width(); ++u) {
            const int su = std::clamp(u - ou, 0, n - 1);
            raw.at(u, v) = crop.at(su, sv);
        }
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Synthetic objects
// ---------------------------------------------------------------------------

enum class ObjectKind
{
    BallArray,
    Star,
    HexNut,
    SetScrew,
    Slab,
};

ObjectKind parse_object_kind(std::string_view name);
std::string object_kind_name(ObjectKind kind);

struct ObjectSpec
{
    ObjectKind kind = ObjectKind::Slab;
    SurfacePoint center{};       // mm
    double rotation_deg = 0.0;   // in-plane, about +z
    double depth = 0.5;          // pressed depth of the contact face, mm
    /// Slab side, ball-array pitch, star tip-to-tip, nut width across flats.
    double size = 0.0;           // mm, 0 selects the per-kind default
    /// Set-screw diameter, nut hole diameter, array ball diameter.
    double diameter = 0.0;       // mm, 0 selects the per-kind default
};

/// Largest distance of any contact point from the object center, mm.
double object_extent(const ObjectSpec& spec);

/// Piecewise-analytic depth of the object pressed into the sensor, clamped
/// to [0, T].
DepthMap synth_object_depth(const ObjectSpec& spec, const SensorGeometry& geom, const OpticalModel& model);

struct SequenceFrame
{
    GrayImage image;
    DepthMap truth;
    Pose pose;
    bool out_of_field = false;
};

/// One frame per pose. Each pose moves the object in plane: its yaw adds to
/// the object rotation and its x/y translation to the object center.
std::vector<SequenceFrame> render_sequence(const ObjectSpec& object, const std::vector<Pose>& trajectory,
                                           const SensorGeometry& geom, const OpticalModel& model,
                                           const IlluminationField& illum, double noise_sigma, Rng& rng);

}  // namespace dtact::sim
