#pragma once

#include <array>
#include <span>
#include <vector>

#include "dtact/core.hpp"

namespace dtact::calib {

struct ContactCircle
{
    double center_u = 0.0;  // crop pixels, sub-pixel
    double center_v = 0.0;
    double radius = 0.0;    // pixels
};

/// Per-pixel mean of equally sized frames, rounded to the nearest level (ties to even).
GrayImage average_frames(std::span<const GrayImage> frames);

/// Algebraic (Kasa) least-squares circle through 2-D points. Throws
/// InsufficientContactError for fewer than three points or a collinear set.
ContactCircle fit_circle_kasa(std::span<const Eigen::Vector2d> points);

struct CircleDetectOptions
{
    /// Difference level that seeds the contact blob.
    double threshold = 5.0;
    /// Rays cast from the coarse center to trace the contact edge.
    int rays = 360;
};

/// Locates the circular contact of a ball press in a difference image.
///
/// Pixels at or above the threshold seed the contact blob; the largest
/// 8-connected blob is kept and a Kasa fit on its boundary gives a coarse
/// circle. Because a spherical cap meets the surface tangentially, the
/// threshold contour lies well inside the true contact edge. The edge is
/// therefore traced along rays at every half-integer level below the
/// threshold, a circle is fitted per level, and the level radii are
/// extrapolated linearly to a zero intensity drop.
///
/// Throws NoContactError when no pixel reaches the threshold and
/// InsufficientContactError when the blob boundary has fewer than 8 pixels.
ContactCircle detect_contact_circle(const DifferenceImage& diff, const CircleDetectOptions& options = {});

/// Spherical-cap depth implied by a detected contact circle: the press
/// depth follows from a = sqrt(2 R d - d^2) with a the contact radius in mm.
/// Throws GeometryError when the contact radius is not smaller than R.
DepthMap analytic_ball_depth(const ContactCircle& circle, double ball_radius, const SensorGeometry& geom);

/// Press depth for a contact radius (mm) on a ball of radius R.
double press_depth_from_contact_radius(double contact_radius_mm, double ball_radius);

/// Intensity-drop -> depth table for the single-image method.
class MappingList
{
  public:
    static constexpr int kSize = 256;

    MappingList();
    /// Validates the table: entries[0] == 0, monotone non-decreasing, finite.
    MappingList(const std::array<double, kSize>& entries, int max_calibrated_index);

    double operator()(int intensity_drop) const { return entries_[static_cast<std::size_t>(intensity_drop)]; }

    const std::array<double, kSize>& entries() const { return entries_; }
    int maxCalibratedIndex() const { return max_calibrated_index_; }
    bool isMonotone() const;

    friend bool operator==(const MappingList&, const MappingList&) = default;

  private:
    std::array<double, kSize> entries_{};
    int max_calibrated_index_ = 0;
};

/// Pool-adjacent-violators: weighted least-squares non-decreasing fit.
std::vector<double> isotonic_fit(std::span<const double> values, std::span<const double> weights);

/// Builds the mapping list from one calibration press: mean truth depth per
/// observed intensity drop inside the contact circle, linear interpolation
/// over unobserved drops, an isotonic projection, and a hold of the last
/// calibrated value above the calibrated range. Throws
/// InsufficientContactError when the circle covers fewer than 32 pixels.
MappingList build_mapping_list(const DifferenceImage& diff, const DepthMap& truth, const ContactCircle& circle);

struct CalibrationSample
{
    double intensity_drop = 0.0;  // >= 1
    double depth = 0.0;           // mm, > 0
    double radius = 0.0;          // pixels from the model center
};

/// Depth per unit intensity drop that grows linearly with the distance to a
/// reference center: D = (k_c * r + b_c) * I_delta.
struct RegressionModel
{
    double k_c = 0.0;       // mm / (gray * pixel)
    double b_c = 0.0;       // mm / gray
    double center_u = 0.0;  // pixels
    double center_v = 0.0;

    double slope(double u, double v) const;
    double depth(double u, double v, double intensity_drop) const { return slope(u, v) * intensity_drop; }

    friend bool operator==(const RegressionModel&, const RegressionModel&) = default;
};

/// Samples with a non-zero drop and positive truth inside the contact
/// circle; radius is measured from (center_u, center_v).
std::vector<CalibrationSample> collect_samples(const DifferenceImage& diff, const DepthMap& truth,
                                               const ContactCircle& circle, double center_u, double center_v);

/// Ordinary least squares of the per-sample slope D / I_delta against r.
///
/// Throws ParameterError for samples with a zero drop or non-positive depth,
/// DegenerateFitError for fewer than 100 samples or a single radius, and
/// DegenerateFitError when the fitted slope is not positive over a crop of
/// `crop_size` pixels (pass 0 to skip that check).
RegressionModel fit_regression(std::span<const CalibrationSample> samples, double center_u, double center_v,
                               int crop_size = 0);

}  // namespace dtact::calib
