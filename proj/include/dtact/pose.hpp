#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtact/core.hpp"
#include "dtact/rigid.hpp"

namespace dtact::pose {

struct Neighbor
{
    std::size_t index = 0;
    double distance = 0.0;  // mm
};

/// Static 3-d tree over a point set for exact nearest-neighbor queries.
/// Immutable once built; queries may run concurrently.
class KdTree
{
  public:
    /// Throws ParameterError for an empty point set.
    explicit KdTree(PointCloud points);

    Neighbor nearest(const Eigen::Vector3d& query) const;

    std::size_t size() const { return points_.size(); }
    const PointCloud& points() const { return points_; }

  private:
    struct Node
    {
        std::size_t point;   // index into points_
        int axis;
        int left = -1;
        int right = -1;
    };

    int build(std::vector<std::size_t>& order, std::size_t begin, std::size_t end);
    void search(int node, const Eigen::Vector3d& query, Neighbor& best, double& best_sq) const;

    PointCloud points_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Exact nearest target point for every query point.
std::vector<Neighbor> nearest_neighbors(const PointCloud& query, const PointCloud& target);

struct Correspondence
{
    std::size_t src = 0;
    std::size_t dst = 0;
};

/// Least-squares rigid transform taking src[pair.src] onto dst[pair.dst]
/// (Kabsch). A reflection in the SVD solution is flipped back to a proper
/// rotation. Throws DegenerateGeometryError for fewer than three pairs or
/// collinear source points.
Pose best_rigid_transform(const PointCloud& src, const PointCloud& dst, std::span<const Correspondence> pairs);

/// All-pairs overload: src[i] corresponds to dst[i].
Pose best_rigid_transform(const PointCloud& src, const PointCloud& dst);

struct IcpOptions
{
    int max_iter = 50;
    double tol_mm = 1e-6;
    /// Pairs farther than this multiple of the median pair distance are
    /// dropped each iteration; 0 disables rejection.
    double reject_factor = 5.0;
    /// Extrapolate along the registration path when successive updates
    /// point the same way; a jump is kept only if it lowers the RMSE.
    bool accelerate = true;
};

struct IcpReport
{
    Pose pose;
    double rmse = 0.0;         // mm, all source points to their nearest target
    int iterations = 0;        // including a final discarded one
    bool converged = false;
    /// RMSE at the initial pose followed by one entry per accepted iteration.
    std::vector<double> rmse_history;
    std::string error;         // non-empty when the run failed
};

/// Point-to-point ICP aligning `source` onto `target`, starting from `init`.
/// Stops when an iteration improves the RMSE by less than tol_mm (converged)
/// or after max_iter iterations. An iteration that would raise the RMSE is
/// discarded and ends the run as converged. Throws ParameterError for empty
/// clouds; degenerate correspondence sets propagate DegenerateGeometryError.
IcpReport icp(const PointCloud& source, const PointCloud& target, const Pose& init, const IcpOptions& options = {});

/// Same, reusing a prebuilt tree over the target.
IcpReport icp(const PointCloud& source, const KdTree& target, const Pose& init, const IcpOptions& options = {});

/// Registers `model` into every frame. Frame k starts from the pose of the
/// last frame whose registration did not fail (identity for the first). Failures are recorded
/// in that frame's report and tracking continues.
std::vector<IcpReport> track_pose(const std::vector<PointCloud>& frames, const PointCloud& model,
                                  const IcpOptions& options = {});

/// Smallest rotation angle between two yaw angles modulo a rotational
/// symmetry of order `symmetry` (1 for none), degrees.
double yaw_error_modulo(double yaw_a_deg, double yaw_b_deg, int symmetry);

}  // namespace dtact::pose
