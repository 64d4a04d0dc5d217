#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dtact/core.hpp"
#include "dtact/sim.hpp"

namespace dtact::check {

/// Small deterministic generator for property tests.
class Gen
{
  public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }

    GrayImage gray(int w, int h)
    {
        GrayImage img(w, h);
        for (auto& px : img.data())
            px = static_cast<std::uint8_t>(integer(0, 255));
        return img;
    }

    DepthMap depth(int w, int h, double max_mm)
    {
        DepthMap d(w, h);
        for (auto& px : d.data())
            px = uniform(0.0, max_mm);
        return d;
    }

    PointCloud cloud(std::size_t n, double extent)
    {
        PointCloud pts(n);
        for (auto& p : pts)
            p = {uniform(-extent, extent), uniform(-extent, extent), uniform(-extent, extent)};
        return pts;
    }

    /// Surface-like patch: a bumpy height field over a square, so ICP has
    /// something to lock onto in every direction.
    PointCloud patch(std::size_t n, double extent)
    {
        const double a = uniform(0.2, 0.6), b = uniform(0.2, 0.6), c = uniform(0.1, 0.4);
        PointCloud pts(n);
        for (auto& p : pts) {
            const double x = uniform(-extent, extent), y = uniform(-extent, extent);
            p = {x, y, a * std::sin(x / 1.7) + b * std::cos(y / 2.3) + c * x * y / (extent * extent)};
        }
        return pts;
    }

    Eigen::Vector3d unit()
    {
        Eigen::Vector3d v(normal(1.0), normal(1.0), normal(1.0));
        return v.normalized();
    }

    std::mt19937_64& engine() { return rng_; }

  private:
    std::mt19937_64 rng_;
};

inline PointCloud transformed(const PointCloud& pts, const Pose& pose)
{
    PointCloud out;
    out.reserve(pts.size());
    for (const auto& p : pts)
        out.push_back(pose.apply(p));
    return out;
}

/// Inverse of the default forward model at unit illumination, in closed form.
inline double inverse_forward(const sim::OpticalModel& m, double drop)
{
    const double ref = m.ambient + m.gain * (1.0 - std::exp(-m.attenuation * m.thickness));
    const double level = ref - drop;
    const double t = -std::log(1.0 - (level - m.ambient) / m.gain) / m.attenuation;
    return m.thickness - t;
}

}  // namespace dtact::check
