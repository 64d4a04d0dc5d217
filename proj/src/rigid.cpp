#include "dtact/rigid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dtact {

Pose Pose::fromYaw(double yaw_deg, const Eigen::Vector3d& t)
{
    Pose pose;
    pose.rotation = Eigen::AngleAxisd(yaw_deg * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    pose.translation = t;
    return pose;
}

Pose Pose::inverse() const
{
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

Pose operator*(const Pose& a, const Pose& b)
{
    Pose out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

double Pose::yawDegrees() const
{
    return std::atan2(rotation(1, 0), rotation(0, 0)) * 180.0 / std::numbers::pi;
}

double Pose::angleDegrees() const
{
    const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

std::array<double, 12> Pose::toArray() const
{
    std::array<double, 12> out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            out[static_cast<std::size_t>(r * 3 + c)] = rotation(r, c);
    for (int i = 0; i < 3; ++i)
        out[static_cast<std::size_t>(9 + i)] = translation(i);
    return out;
}

Pose Pose::fromArray(const std::array<double, 12>& values)
{
    Pose pose;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            pose.rotation(r, c) = values[static_cast<std::size_t>(r * 3 + c)];
    for (int i = 0; i < 3; ++i)
        pose.translation(i) = values[static_cast<std::size_t>(9 + i)];
    return pose;
}

double Pose::orthonormalityError() const
{
    const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return std::max(ortho, std::abs(rotation.determinant() - 1.0));
}

}  // namespace dtact
