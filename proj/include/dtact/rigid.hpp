#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dtact {

/// Rigid transform p' = R p + t, millimetres.
struct Pose
{
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Pose identity() { return {}; }

    /// Rotation about +z by yaw_deg followed by a translation.
    static Pose fromYaw(double yaw_deg, const Eigen::Vector3d& t = Eigen::Vector3d::Zero());

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    Pose inverse() const;

    /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
    friend Pose operator*(const Pose& a, const Pose& b);

    /// Angle of the rotation about +z, degrees, in (-180, 180].
    double yawDegrees() const;

    /// Total rotation angle, degrees, in [0, 180].
    double angleDegrees() const;

    /// Row-major R followed by t.
    std::array<double, 12> toArray() const;
    static Pose fromArray(const std::array<double, 12>& values);

    /// Max deviation of R^T R from identity and of det(R) from one.
    double orthonormalityError() const;
};

}  // namespace dtact
