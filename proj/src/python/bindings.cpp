#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dtact/io.hpp"
#include "dtact/workflow.hpp"

namespace py = pybind11;
using namespace dtact;

namespace {

using Cloud = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename Img>
py::array to_numpy(const Img& img)
{
    using T = typename Img::value_type;
    Array<T> out({img.height(), img.width()});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

template <typename Img>
Img from_numpy(const Array<typename Img::value_type>& a)
{
    if (a.ndim() != 2)
        throw ParameterError("expected a 2-d array, got " + std::to_string(a.ndim()) + " dimensions");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    return Img(w, h, std::vector<typename Img::value_type>(a.data(), a.data() + a.size()));
}

Cloud to_matrix(const PointCloud& cloud)
{
    Cloud m(static_cast<Eigen::Index>(cloud.size()), 3);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = cloud[i].transpose();
    return m;
}

PointCloud from_matrix(const Cloud& m)
{
    PointCloud cloud(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        cloud[static_cast<std::size_t>(i)] = m.row(i).transpose();
    return cloud;
}

Eigen::Matrix4d to_homogeneous(const Pose& p)
{
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = p.rotation;
    m.topRightCorner<3, 1>() = p.translation;
    return m;
}

Pose from_homogeneous(const Eigen::Matrix4d& m)
{
    Pose p;
    p.rotation = m.topLeftCorner<3, 3>();
    p.translation = m.topRightCorner<3, 1>();
    return p;
}

sim::OpticalModel optics_for(double thickness)
{
    sim::OpticalModel m;
    m.thickness = thickness;
    m.validate();
    return m;
}

py::dict scheme_dict(const workflow::SchemeResult& s)
{
    py::dict d;
    d["scheme"] = sim::scheme_name(s.scheme);
    d["reference_std"] = s.reference_std;
    d["single_mae_mm"] = s.single_mae ? py::cast(*s.single_mae) : py::none();
    d["regression_mae_mm"] = s.regression_mae ? py::cast(*s.regression_mae) : py::none();
    d["single_error"] = s.single_error;
    d["regression_error"] = s.regression_error;
    return d;
}

}  // namespace

PYBIND11_MODULE(_dtact, m)
{
    m.doc() = "Vision-based tactile sensing: simulation, calibration, reconstruction and pose tracking.";

    auto base = py::register_exception<Error>(m, "DtactError", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<NoContactError>(m, "NoContactError", base.ptr());
    py::register_exception<InsufficientContactError>(m, "InsufficientContactError", base.ptr());
    py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
    py::register_exception<io::ParseError>(m, "ParseError", base.ptr());
    py::register_exception<io::IoError>(m, "IoError", base.ptr());

    const SensorGeometry geom;
    m.attr("CROP_SIZE") = geom.cropSize();
    m.attr("PIXEL_PITCH") = geom.pixelPitch();

    // Simulation ------------------------------------------------------------

    m.def(
        "sphere_press_depth",
        [geom](double ball_radius, double d_max, double x, double y, double thickness) {
            return to_numpy(sim::sphere_press_depth(geom, ball_radius, d_max, {x, y}, optics_for(thickness)));
        },
        py::arg("ball_radius"), py::arg("d_max"), py::arg("x") = 0.0, py::arg("y") = 0.0,
        py::arg("thickness") = 2.0);

    m.def(
        "object_depth",
        [geom](const std::string& kind, double depth, double rotation_deg, double x, double y, double thickness) {
            const sim::ObjectSpec spec{sim::parse_object_kind(kind), {x, y}, rotation_deg, depth};
            return to_numpy(sim::synth_object_depth(spec, geom, optics_for(thickness)));
        },
        py::arg("kind"), py::arg("depth"), py::arg("rotation_deg") = 0.0, py::arg("x") = 0.0, py::arg("y") = 0.0,
        py::arg("thickness") = 2.0);

    m.def(
        "illumination",
        [geom](const std::string& scheme) {
            return to_numpy(sim::make_illumination(sim::parse_scheme(scheme), geom.cropSize()).gain);
        },
        py::arg("scheme") = "standard");

    m.def(
        "render_tactile",
        [](const Array<double>& depth, const std::string& scheme, double noise_sigma, std::uint64_t seed,
           double thickness) {
            const DepthMap d = from_numpy<DepthMap>(depth);
            if (d.width() != d.height())
                throw ParameterError("depth map must be square");
            const auto illum = sim::make_illumination(sim::parse_scheme(scheme), d.width());
            sim::Rng rng(seed);
            return to_numpy(sim::render_tactile(d, optics_for(thickness), illum, noise_sigma, rng));
        },
        py::arg("depth"), py::arg("scheme") = "standard", py::arg("noise_sigma") = 0.0, py::arg("seed") = 0,
        py::arg("thickness") = 2.0);

    m.def(
        "render_reference",
        [geom](const std::string& scheme, double noise_sigma, std::uint64_t seed, int frames, double thickness) {
            const auto illum = sim::make_illumination(sim::parse_scheme(scheme), geom.cropSize());
            sim::Rng rng(seed);
            return to_numpy(sim::render_reference(optics_for(thickness), illum, noise_sigma, rng, frames));
        },
        py::arg("scheme") = "standard", py::arg("noise_sigma") = 0.0, py::arg("seed") = 0, py::arg("frames") = 1,
        py::arg("thickness") = 2.0);

    // Calibration -----------------------------------------------------------

    py::class_<calib::MappingList>(m, "MappingList")
        .def_property_readonly("entries",
                               [](const calib::MappingList& t) {
                                   return std::vector<double>(t.entries().begin(), t.entries().end());
                               })
        .def_property_readonly("max_calibrated_index", &calib::MappingList::maxCalibratedIndex)
        .def("is_monotone", &calib::MappingList::isMonotone)
        .def("__call__", [](const calib::MappingList& t, int drop) {
            if (drop < 0 || drop > 255)
                throw ParameterError("intensity drop must be in [0, 255]");
            return t(drop);
        });

    py::class_<calib::RegressionModel>(m, "RegressionModel")
        .def(py::init([](double k_c, double b_c, double cu, double cv) { return calib::RegressionModel{k_c, b_c, cu, cv}; }),
             py::arg("k_c"), py::arg("b_c"), py::arg("center_u"), py::arg("center_v"))
        .def_readonly("k_c", &calib::RegressionModel::k_c)
        .def_readonly("b_c", &calib::RegressionModel::b_c)
        .def_readonly("center_u", &calib::RegressionModel::center_u)
        .def_readonly("center_v", &calib::RegressionModel::center_v)
        .def("depth", &calib::RegressionModel::depth, py::arg("u"), py::arg("v"), py::arg("intensity_drop"));

    m.def(
        "difference",
        [](const Array<std::uint8_t>& reference, const Array<std::uint8_t>& contact) {
            return to_numpy(recon::difference(from_numpy<GrayImage>(reference), from_numpy<GrayImage>(contact)));
        },
        py::arg("reference"), py::arg("contact"));

    m.def(
        "detect_contact_circle",
        [](const Array<std::uint8_t>& diff, double threshold) {
            const auto c = calib::detect_contact_circle(from_numpy<DifferenceImage>(diff), {threshold});
            return py::make_tuple(c.center_u, c.center_v, c.radius);
        },
        py::arg("diff"), py::arg("threshold") = 5.0, "Contact circle as (center_u, center_v, radius) in pixels.");

    m.def("press_depth_from_contact_radius", &calib::press_depth_from_contact_radius, py::arg("contact_radius_mm"),
          py::arg("ball_radius"));

    m.def(
        "calibrate_single",
        [geom](const Array<std::uint8_t>& reference, const Array<std::uint8_t>& press, double ball_radius) {
            return workflow::calibrate_single(from_numpy<GrayImage>(reference), from_numpy<GrayImage>(press),
                                              ball_radius, geom);
        },
        py::arg("reference"), py::arg("press"), py::arg("ball_radius") = 4.0);

    m.def(
        "calibrate_regression",
        [geom](const Array<std::uint8_t>& reference, const std::vector<Array<std::uint8_t>>& presses,
               double ball_radius, double center_u, double center_v) {
            std::vector<GrayImage> frames;
            for (const auto& p : presses)
                frames.push_back(from_numpy<GrayImage>(p));
            return workflow::calibrate_regression(from_numpy<GrayImage>(reference), frames, ball_radius, geom,
                                                  center_u, center_v);
        },
        py::arg("reference"), py::arg("presses"), py::arg("ball_radius") = 4.0, py::arg("center_u") = 290.0,
        py::arg("center_v") = 290.0);

    // Reconstruction --------------------------------------------------------

    py::class_<recon::Pipeline>(m, "Pipeline")
        .def(py::init([geom](const recon::DepthMethod& method, const Array<std::uint8_t>& reference,
                             double depth_clamp) {
                 recon::PipelineConfig config;
                 config.geom = geom;
                 config.method = method;
                 config.depth_clamp = depth_clamp;
                 return recon::Pipeline(config, from_numpy<GrayImage>(reference));
             }),
             py::arg("method"), py::arg("reference"), py::arg("depth_clamp") = 2.0)
        .def(
            "process",
            [](const recon::Pipeline& p, const Array<std::uint8_t>& frame) {
                return to_numpy(p.process(from_numpy<GrayImage>(frame)));
            },
            py::arg("frame"));

    m.def(
        "depth_to_pointcloud",
        [geom](const Array<double>& depth, double min_depth) {
            return to_matrix(recon::depth_to_pointcloud(from_numpy<DepthMap>(depth), geom, min_depth));
        },
        py::arg("depth"), py::arg("min_depth") = -1.0);

    // Pose ------------------------------------------------------------------

    m.def(
        "icp",
        [](const Cloud& source, const Cloud& target, const Eigen::Matrix4d& init, int max_iter, double tol_mm,
           double reject_factor, bool accelerate) {
            const auto r = pose::icp(from_matrix(source), from_matrix(target), from_homogeneous(init),
                                     {max_iter, tol_mm, reject_factor, accelerate});
            py::dict d;
            d["pose"] = to_homogeneous(r.pose);
            d["rmse"] = r.rmse;
            d["iterations"] = r.iterations;
            d["converged"] = r.converged;
            d["rmse_history"] = r.rmse_history;
            return d;
        },
        py::arg("source"), py::arg("target"), py::arg("init") = Eigen::Matrix4d::Identity(), py::arg("max_iter") = 50,
        py::arg("tol_mm") = 1e-6, py::arg("reject_factor") = 5.0, py::arg("accelerate") = true,
        "Point-to-point ICP aligning source onto target; returns a dict with a 4x4 pose.");

    m.def(
        "yaw_error_modulo", &pose::yaw_error_modulo, py::arg("yaw_a_deg"), py::arg("yaw_b_deg"),
        py::arg("symmetry"));

    // Workflows -------------------------------------------------------------

    m.def(
        "evaluate",
        [](const std::vector<std::string>& schemes, double noise_sigma, std::uint64_t seed) {
            workflow::Scenario sc;
            sc.noise_sigma = noise_sigma;
            sc.seed = seed;
            py::list out;
            for (const auto& name : schemes)
                out.append(scheme_dict(workflow::evaluate_scheme(sc, sim::parse_scheme(name))));
            return out;
        },
        py::arg("schemes") = std::vector<std::string>{"standard"}, py::arg("noise_sigma") = 0.0,
        py::arg("seed") = 1);

    m.def(
        "track_nut",
        [](int frames, double step_deg) {
            workflow::TrackingScenario tr;
            tr.frames = frames;
            tr.step_deg = step_deg;
            const auto r = workflow::run_tracking(workflow::Scenario{}, tr);
            py::dict d;
            d["max_yaw_error_deg"] = r.max_yaw_error_deg;
            d["seconds"] = r.seconds;
            std::vector<double> yaw;
            for (const auto& f : r.frames)
                yaw.push_back(f.report.pose.yawDegrees());
            d["yaw_deg"] = yaw;
            return d;
        },
        py::arg("frames") = 12, py::arg("step_deg") = 5.0);

    // Files -----------------------------------------------------------------

    m.def("load_pgm", [](const std::filesystem::path& p) { return to_numpy(io::load_pgm(p)); }, py::arg("path"));
    m.def(
        "save_pgm",
        [](const std::filesystem::path& p, const Array<std::uint8_t>& img) { io::save_pgm(p, from_numpy<GrayImage>(img)); },
        py::arg("path"), py::arg("image"));
    m.def("load_depth", [](const std::filesystem::path& p) { return to_numpy(io::load_depth(p)); }, py::arg("path"));
    m.def(
        "save_depth",
        [](const std::filesystem::path& p, const Array<double>& d) { io::save_depth(p, from_numpy<DepthMap>(d)); },
        py::arg("path"), py::arg("depth"));
    m.def("load_ply", [](const std::filesystem::path& p) { return to_matrix(io::load_ply(p)); }, py::arg("path"));
    m.def(
        "save_ply", [](const std::filesystem::path& p, const Cloud& c) { io::save_ply(p, from_matrix(c)); },
        py::arg("path"), py::arg("cloud"));
    m.def(
        "load_calibration",
        [](const std::filesystem::path& p) {
            const auto c = io::load_calibration(p);
            return py::make_tuple(c.method, c.depth_clamp);
        },
        py::arg("path"), "Returns (method, depth_clamp).");
    m.def(
        "save_calibration",
        [](const std::filesystem::path& p, const recon::DepthMethod& method, double depth_clamp) {
            io::save_calibration(p, {method, depth_clamp});
        },
        py::arg("path"), py::arg("method"), py::arg("depth_clamp") = 2.0);
}
