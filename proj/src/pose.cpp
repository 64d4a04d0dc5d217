#include "dtact/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace dtact::pose {

KdTree::KdTree(PointCloud points) : points_(std::move(points))
{
    if (points_.empty())
        throw ParameterError("nearest-neighbor target cloud is empty");
    nodes_.reserve(points_.size());
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    root_ = build(order, 0, order.size());
}

int KdTree::build(std::vector<std::size_t>& order, std::size_t begin, std::size_t end)
{
    if (begin >= end)
        return -1;
    // Split on the axis of largest spread.
    Eigen::Vector3d lo = points_[order[begin]];
    Eigen::Vector3d hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order[i]]);
        hi = hi.cwiseMax(points_[order[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back({order[mid], axis});
    const int left = build(order, begin, mid);
    const int right = build(order, mid + 1, end);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
}

void KdTree::search(int node, const Eigen::Vector3d& query, Neighbor& best, double& best_sq) const
{
    if (node < 0)
        return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const Eigen::Vector3d& p = points_[n.point];
    const double d_sq = (p - query).squaredNorm();
    if (d_sq < best_sq || (d_sq == best_sq && n.point < best.index)) {
        best_sq = d_sq;
        best.index = n.point;
    }
    const double delta = query[n.axis] - p[n.axis];
    search(delta < 0.0 ? n.left : n.right, query, best, best_sq);
    if (delta * delta <= best_sq)
        search(delta < 0.0 ? n.right : n.left, query, best, best_sq);
}

Neighbor KdTree::nearest(const Eigen::Vector3d& query) const
{
    Neighbor best{std::numeric_limits<std::size_t>::max(), 0.0};
    double best_sq = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_sq);
    best.distance = std::sqrt(best_sq);
    return best;
}

std::vector<Neighbor> nearest_neighbors(const PointCloud& query, const PointCloud& target)
{
    const KdTree tree(target);
    std::vector<Neighbor> out;
    out.reserve(query.size());
    for (const auto& q : query)
        out.push_back(tree.nearest(q));
    return out;
}

Pose best_rigid_transform(const PointCloud& src, const PointCloud& dst, std::span<const Correspondence> pairs)
{
    if (pairs.size() < 3)
        throw DegenerateGeometryError("rigid fit needs at least three correspondences");
    Eigen::Vector3d mu_src = Eigen::Vector3d::Zero();
    Eigen::Vector3d mu_dst = Eigen::Vector3d::Zero();
    for (const auto& c : pairs) {
        mu_src += src.at(c.src);
        mu_dst += dst.at(c.dst);
    }
    const double n = static_cast<double>(pairs.size());
    mu_src /= n;
    mu_dst /= n;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& c : pairs) {
        const Eigen::Vector3d a = src[c.src] - mu_src;
        const Eigen::Vector3d b = dst[c.dst] - mu_dst;
        cov += a * b.transpose();
        scatter += a * a.transpose();
    }

    // Collinear (or coincident) sources leave the rotation about that line
    // undetermined.
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> spread(scatter);
    const Eigen::Vector3d ev = spread.eigenvalues();  // ascending
    if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300)) || !(ev(2) > 0.0))
        throw DegenerateGeometryError("correspondence source points are collinear");

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    if ((v * u.transpose()).determinant() < 0.0)
        fix(2, 2) = -1.0;

    Pose pose;
    pose.rotation = v * fix * u.transpose();
    pose.translation = mu_dst - pose.rotation * mu_src;
    return pose;
}

Pose best_rigid_transform(const PointCloud& src, const PointCloud& dst)
{
    if (src.size() != dst.size())
        throw ParameterError("rigid fit clouds differ in size");
    std::vector<Correspondence> pairs(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        pairs[i] = {i, i};
    return best_rigid_transform(src, dst, pairs);
}

namespace {

// Source cloud moved by a pose and matched to its nearest target points.
struct Matching
{
    PointCloud moved;
    std::vector<Neighbor> matches;
    double rmse = 0.0;

    void assign(const PointCloud& source, const KdTree& target, const Pose& pose)
    {
        moved.resize(source.size());
        matches.resize(source.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < source.size(); ++i) {
            moved[i] = pose.apply(source[i]);
            matches[i] = target.nearest(moved[i]);
            sum += matches[i].distance * matches[i].distance;
        }
        rmse = std::sqrt(sum / static_cast<double>(source.size()));
    }
};

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Registration state: rotation vector scaled by the cloud radius, so both
// halves are in mm, followed by the translation.
Vector6d to_state(const Pose& pose, double scale)
{
    const Eigen::AngleAxisd aa(pose.rotation);
    Vector6d q;
    q.head<3>() = aa.angle() * aa.axis() * scale;
    q.tail<3>() = pose.translation;
    return q;
}

Pose from_state(const Vector6d& q, double scale)
{
    Pose pose;
    const Eigen::Vector3d w = q.head<3>() / scale;
    const double angle = w.norm();
    pose.rotation = angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() : Eigen::Matrix3d::Identity();
    pose.translation = q.tail<3>();
    return pose;
}

// Distance along the current update direction to try next, from the last
// three states and errors: the vertex of the parabola through them, else
// the zero of the line through the last two. Zero when nothing is predicted.
double extrapolation_length(const std::vector<Vector6d>& states, const std::vector<double>& errors)
{
    const std::size_t k = states.size() - 1;
    const Vector6d d1 = states[k] - states[k - 1];
    const Vector6d d0 = states[k - 1] - states[k - 2];
    const double n1 = d1.norm();
    const double n0 = d0.norm();
    if (n1 <= 0.0 || n0 <= 0.0)
        return 0.0;
    constexpr double kMaxAngleCos = 0.984807753;  // 10 degrees
    if (d1.dot(d0) / (n1 * n0) < kMaxAngleCos)
        return 0.0;

    const double x0 = -(n1 + n0), x1 = -n1;
    const double e0 = errors[k - 2], e1 = errors[k - 1], e2 = errors[k];
    const double linear = (e1 > e2) ? e2 * n1 / (e1 - e2) : 0.0;
    // Parabola e(x) = a x^2 + b x + e2 through (x0, e0), (x1, e1), (0, e2).
    const double a = ((e0 - e2) / x0 - (e1 - e2) / x1) / (x0 - x1);
    const double b = (e1 - e2) / x1 - a * x1;
    const double vertex = a > 0.0 ? -b / (2.0 * a) : 0.0;
    double length = (vertex > 0.0 && vertex < linear) ? vertex : linear;
    return std::min(length, 25.0 * n1);
}

}  // namespace

IcpReport icp(const PointCloud& source, const PointCloud& target, const Pose& init, const IcpOptions& options)
{
    if (target.empty())
        throw ParameterError("ICP target cloud is empty");
    return icp(source, KdTree(target), init, options);
}

IcpReport icp(const PointCloud& source, const KdTree& target, const Pose& init, const IcpOptions& options)
{
    if (source.empty())
        throw ParameterError("ICP source cloud is empty");

    Matching current, trial;
    current.assign(source, target, init);
    IcpReport report;
    report.pose = init;
    report.rmse = current.rmse;
    report.rmse_history.push_back(report.rmse);

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : source)
        centroid += p;
    centroid /= static_cast<double>(source.size());
    double spread = 0.0;
    for (const auto& p : source)
        spread += (p - centroid).squaredNorm();
    const double scale = std::max(std::sqrt(spread / static_cast<double>(source.size())), 1e-6);

    std::vector<Vector6d> states{to_state(init, scale)};
    std::vector<double> errors{report.rmse};
    std::vector<double> distances(source.size());
    std::vector<Correspondence> pairs;
    pairs.reserve(source.size());

    for (int iter = 0; iter < options.max_iter; ++iter) {
        double cutoff = std::numeric_limits<double>::infinity();
        if (options.reject_factor > 0.0) {
            for (std::size_t i = 0; i < source.size(); ++i)
                distances[i] = current.matches[i].distance;
            const auto mid = distances.begin() + static_cast<std::ptrdiff_t>(distances.size() / 2);
            std::nth_element(distances.begin(), mid, distances.end());
            if (*mid > 0.0)
                cutoff = options.reject_factor * *mid;
        }
        pairs.clear();
        for (std::size_t i = 0; i < source.size(); ++i)
            if (current.matches[i].distance <= cutoff)
                pairs.push_back({i, current.matches[i].index});

        const Pose step = best_rigid_transform(current.moved, target.points(), pairs);
        Pose candidate = step * report.pose;
        trial.assign(source, target, candidate);
        ++report.iterations;
        if (trial.rmse > report.rmse) {
            report.converged = true;
            break;
        }
        const double previous = report.rmse;
        std::swap(current, trial);
        states.push_back(to_state(candidate, scale));
        errors.push_back(current.rmse);

        if (options.accelerate && states.size() >= 3) {
            const double length = extrapolation_length(states, errors);
            if (length > 0.0) {
                const Vector6d dir = (states.back() - states[states.size() - 2]).normalized();
                const Vector6d q = states.back() + length * dir;
                const Pose jump = from_state(q, scale);
                trial.assign(source, target, jump);
                if (trial.rmse < current.rmse) {
                    candidate = jump;
                    std::swap(current, trial);
                    states.back() = q;
                    errors.back() = current.rmse;
                }
            }
        }

        report.pose = candidate;
        report.rmse = current.rmse;
        report.rmse_history.push_back(current.rmse);
        if (previous - current.rmse < options.tol_mm) {
            report.converged = true;
            break;
        }
    }
    // Re-orthonormalize to wash out accumulated round-off.
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(report.pose.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Eigen::Matrix3d u = svd.matrixU();
        u.col(2) *= -1.0;
        r = u * svd.matrixV().transpose();
    }
    report.pose.rotation = r;
    return report;
}

std::vector<IcpReport> track_pose(const std::vector<PointCloud>& frames, const PointCloud& model,
                                  const IcpOptions& options)
{
    if (frames.empty())
        throw ParameterError("track_pose needs at least one frame");
    std::vector<IcpReport> reports;
    reports.reserve(frames.size());
    Pose last_good = Pose::identity();
    for (std::size_t k = 0; k < frames.size(); ++k) {
        IcpReport report;
        report.pose = last_good;
        try {
            if (frames[k].empty())
                throw ParameterError("frame " + std::to_string(k) + " has no contact points");
            report = icp(model, frames[k], last_good, options);
            last_good = report.pose;
        }
        catch (const Error& e) {
            report.converged = false;
            report.error = e.what();
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

double yaw_error_modulo(double yaw_a_deg, double yaw_b_deg, int symmetry)
{
    if (symmetry < 1)
        throw ParameterError("rotational symmetry order must be at least 1");
    const double period = 360.0 / symmetry;
    double d = std::fmod(yaw_a_deg - yaw_b_deg, period);
    if (d < 0.0)
        d += period;
    return std::min(d, period - d);
}

}  // namespace dtact::pose
