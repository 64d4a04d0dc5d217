// Command-line front end: simulate, calibrate, reconstruct, evaluate, track.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dtact/config.hpp"
#include "dtact/io.hpp"
#include "dtact/workflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dtact;

namespace {

struct CommonOptions
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> method;
    std::optional<std::string> scheme;
    std::optional<double> thickness;
    std::optional<double> noise;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--method", o.method, "Calibration method")->check(CLI::IsMember({"single", "regression"}));
    cmd->add_option("--scheme", o.scheme, "Illumination scheme")
        ->check(CLI::IsMember({"standard", "s1", "s2", "s3", "s4"}));
    cmd->add_option("--thickness", o.thickness, "Semitransparent layer thickness, mm");
    cmd->add_option("--noise", o.noise, "Per-frame Gaussian intensity noise, gray levels");
}

config::RunConfig resolve(const CommonOptions& o)
{
    config::RunConfig c = o.config_path.empty() ? config::RunConfig{} : config::load_config(o.config_path);
    if (o.seed)
        c.scenario.seed = *o.seed;
    if (o.out)
        c.out = *o.out;
    if (o.method)
        c.method = config::parse_method(*o.method);
    if (o.scheme)
        c.scheme = sim::parse_scheme(*o.scheme);
    if (o.thickness)
        c.scenario.optics.thickness = *o.thickness;
    if (o.noise)
        c.scenario.noise_sigma = *o.noise;
    config::validate(c);
    return c;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw io::IoError("cannot create output directory " + dir.string());
}

std::string frame_name(std::size_t i, const char* ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%03zu%s", i, ext);
    return buf;
}

json press_json(const workflow::BallPress& p)
{
    return {{"x", p.center.x}, {"y", p.center.y}, {"ball_radius", p.ball_radius}, {"d_max", p.d_max}};
}

json pose_json(const Pose& p)
{
    json a = json::array();
    for (double v : p.toArray())
        a.push_back(v);
    return a;
}

// ---------------------------------------------------------------------------
// Input frames: PGM files or manifests that list them
// ---------------------------------------------------------------------------

struct InputFrame
{
    fs::path image;
    std::optional<fs::path> depth;
    std::optional<double> ball_radius;
    std::optional<Pose> pose;
};

struct Inputs
{
    std::vector<InputFrame> frames;
    std::optional<fs::path> model_frame;
    std::optional<fs::path> reference;
};

Inputs expand_inputs(const std::vector<std::string>& args)
{
    Inputs in;
    for (const auto& arg : args) {
        const fs::path path(arg);
        if (path.extension() != ".json") {
            in.frames.push_back({path, std::nullopt, std::nullopt, std::nullopt});
            continue;
        }
        json m;
        try {
            m = json::parse(io::read_file(path));
        }
        catch (const json::parse_error& e) {
            throw io::ParseError(path.string() + ": invalid manifest: " + e.what(), e.byte == 0 ? 0 : e.byte - 1);
        }
        const fs::path base = path.parent_path();
        try {
            for (const auto& f : m.at("frames")) {
                InputFrame frame;
                frame.image = base / f.at("image").get<std::string>();
                if (f.contains("depth"))
                    frame.depth = base / f.at("depth").get<std::string>();
                if (f.contains("press"))
                    frame.ball_radius = f.at("press").at("ball_radius").get<double>();
                if (f.contains("pose")) {
                    const auto values = f.at("pose").get<std::vector<double>>();
                    if (values.size() != 12)
                        throw ParameterError(path.string() + ": pose must have 12 numbers");
                    std::array<double, 12> a{};
                    std::copy(values.begin(), values.end(), a.begin());
                    frame.pose = Pose::fromArray(a);
                }
                in.frames.push_back(std::move(frame));
            }
            if (m.contains("model_frame"))
                in.model_frame = base / m.at("model_frame").at("image").get<std::string>();
            if (m.contains("reference"))
                in.reference = base / m.at("reference").get<std::string>();
        }
        catch (const json::exception& e) {
            throw ParameterError(path.string() + ": malformed manifest: " + e.what());
        }
    }
    return in;
}

GrayImage load_reference(const std::optional<std::string>& flag, const Inputs& in)
{
    if (flag)
        return io::load_pgm(*flag);
    if (in.reference)
        return io::load_pgm(*in.reference);
    throw ParameterError("missing reference image (pass --reference)");
}

/// Rectified crop of a raw frame; crop-size frames pass through.
GrayImage to_crop(const GrayImage& img, const recon::Rectifier& rectifier, const SensorGeometry& geom)
{
    if (img.width() == geom.cropSize() && img.height() == geom.cropSize())
        return img;
    return rectifier.apply(img);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimOptions
{
    std::optional<std::string> mode;
};

int cmd_simulate(const CommonOptions& common, const SimOptions& opts)
{
    config::RunConfig c = resolve(common);
    if (opts.mode)
        c.sim_mode = config::parse_sim_mode(*opts.mode);
    const auto& sc = c.scenario;
    ensure_dir(c.out);

    const auto illum = sim::make_illumination(c.scheme, sc.geom.cropSize(), sc.led_sigma);
    sim::Rng press_rng(sc.seed);
    const workflow::PressSet presses = workflow::draw_presses(sc.protocol, sc.optics.thickness, press_rng);
    std::seed_seq noise_seed{static_cast<std::uint32_t>(sc.seed), static_cast<std::uint32_t>(sc.seed >> 32), 0x5eedu};
    sim::Rng rng(noise_seed);

    json manifest;
    manifest["format"] = "dtact-manifest-1";
    manifest["mode"] = config::sim_mode_name(c.sim_mode);
    manifest["seed"] = sc.seed;
    manifest["scheme"] = sim::scheme_name(c.scheme);
    manifest["config"] = json::parse(config::to_json(c));
    manifest["config"].erase("out");
    manifest["frames"] = json::array();

    auto write_frame = [&](std::size_t index, const GrayImage& crop, const DepthMap& truth, json entry) {
        const std::string image = frame_name(index, ".pgm");
        const std::string depth = frame_name(index, ".depth");
        io::save_pgm(c.out / image, sim::embed_in_frame(crop, sc.geom));
        io::save_depth(c.out / depth, truth);
        entry["image"] = image;
        entry["depth"] = depth;
        manifest["frames"].push_back(std::move(entry));
    };

    auto write_presses = [&](const std::vector<workflow::BallPress>& list, int average) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& p = list[i];
            const DepthMap truth = sim::sphere_press_depth(sc.geom, p.ball_radius, p.d_max, p.center, sc.optics);
            const GrayImage img = workflow::render_press(p, sc, illum, average, rng);
            write_frame(i, img, truth, {{"press", press_json(p)}});
        }
    };

    switch (c.sim_mode) {
    case config::SimMode::Reference: {
        const GrayImage ref = sim::render_reference(sc.optics, illum, sc.noise_sigma, rng, sc.reference_frames);
        write_frame(0, ref, DepthMap(sc.geom.cropSize(), sc.geom.cropSize(), 0.0), json::object());
        break;
    }
    case config::SimMode::Press:
        write_presses({c.press}, 1);
        break;
    case config::SimMode::Calibration:
        write_presses({presses.calibration}, sc.calibration_frames);
        break;
    case config::SimMode::Regression:
        write_presses(presses.regression, sc.calibration_frames);
        break;
    case config::SimMode::Test:
        write_presses(presses.test, 1);
        break;
    case config::SimMode::Object: {
        const DepthMap truth = sim::synth_object_depth(c.object, sc.geom, sc.optics);
        const GrayImage img = sim::render_tactile(truth, sc.optics, illum, sc.noise_sigma, rng);
        write_frame(0, img, truth, {{"object", sim::object_kind_name(c.object.kind)}});
        break;
    }
    case config::SimMode::Sequence: {
        std::vector<Pose> trajectory;
        for (int k = 0; k < c.tracking.frames; ++k)
            trajectory.push_back(Pose::fromYaw(k * c.tracking.step_deg));
        const double noise = c.tracking.noise_sigma > 0.0 ? c.tracking.noise_sigma : sc.noise_sigma;
        const auto frames = sim::render_sequence(c.object, trajectory, sc.geom, sc.optics, illum, noise, rng);
        std::vector<io::PoseRecord> truth_poses;
        for (std::size_t k = 0; k < frames.size(); ++k) {
            write_frame(k, frames[k].image, frames[k].truth,
                        {{"object", sim::object_kind_name(c.object.kind)},
                         {"pose", pose_json(frames[k].pose)},
                         {"out_of_field", frames[k].out_of_field}});
            truth_poses.push_back({static_cast<int>(k), true, 0, 0.0, frames[k].pose, {}});
        }
        const auto model = sim::render_sequence(c.object, {Pose::identity()}, sc.geom, sc.optics, illum, noise, rng);
        io::save_pgm(c.out / "model.pgm", sim::embed_in_frame(model.front().image, sc.geom));
        io::save_depth(c.out / "model.depth", model.front().truth);
        manifest["model_frame"] = {{"image", "model.pgm"}, {"depth", "model.depth"}};
        manifest["symmetry"] = c.tracking.symmetry;
        io::write_file(c.out / "truth_poses.txt", io::encode_pose_report(truth_poses));
        break;
    }
    }
    io::write_file(c.out / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << manifest["frames"].size() << " frame(s) to " << c.out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct FrameOptions
{
    std::optional<std::string> reference;
    std::vector<std::string> inputs;
};

int cmd_calibrate(const CommonOptions& common, const FrameOptions& opts, std::optional<double> ball_radius_flag)
{
    const config::RunConfig c = resolve(common);
    const auto& sc = c.scenario;
    const Inputs in = expand_inputs(opts.inputs);
    if (in.frames.empty())
        throw ParameterError("calibrate needs at least one press frame");
    const recon::Rectifier rectifier(sc.camera, sc.geom);
    const GrayImage reference = to_crop(load_reference(opts.reference, in), rectifier, sc.geom);

    std::vector<GrayImage> frames;
    for (const auto& f : in.frames)
        frames.push_back(to_crop(io::load_pgm(f.image), rectifier, sc.geom));
    const double radius = ball_radius_flag              ? *ball_radius_flag
                          : in.frames.front().ball_radius ? *in.frames.front().ball_radius
                                                          : c.ball_radius;

    io::CalibrationFile out;
    out.depth_clamp = sc.optics.thickness;
    if (c.method == config::Method::Single) {
        // Several frames of the same press are averaged, as over a short time window.
        const GrayImage press = frames.size() == 1 ? frames.front() : calib::average_frames(frames);
        try {
            out.method = workflow::calibrate_single(reference, press, radius, sc.geom, sc.circle_threshold);
        }
        catch (const Error& e) {
            throw Error(std::string("frame 0: ") + e.what());
        }
    }
    else {
        if (frames.size() < 2)
            throw DegenerateFitError("regression calibration needs at least 2 distinct presses, got " +
                                     std::to_string(frames.size()));
        const Eigen::Vector2d center =
            c.regression_center ? *c.regression_center : workflow::regression_center(c.scheme, sc.geom.cropSize());
        out.method = workflow::calibrate_regression(reference, frames, radius, sc.geom, center.x(), center.y(),
                                                    sc.circle_threshold);
    }

    const fs::path target = c.out.extension() == ".txt" ? c.out : c.out / "calibration.txt";
    if (target.has_parent_path())
        ensure_dir(target.parent_path());
    io::save_calibration(target, out);
    std::cout << "wrote " << config::method_name(c.method) << " calibration to " << target.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

recon::PipelineConfig pipeline_from_file(const config::RunConfig& c, const io::CalibrationFile& file)
{
    recon::PipelineConfig pc = workflow::pipeline_config(c.scenario, file.method);
    pc.depth_clamp = file.depth_clamp;
    return pc;
}

int cmd_reconstruct(const CommonOptions& common, const FrameOptions& opts, const std::string& calibration,
                    std::optional<double> contact_only)
{
    config::RunConfig c = resolve(common);
    if (contact_only)
        c.cloud_threshold = *contact_only;
    const Inputs in = expand_inputs(opts.inputs);
    if (in.frames.empty())
        throw ParameterError("reconstruct needs at least one frame");
    const io::CalibrationFile model = io::load_calibration(calibration);
    const GrayImage reference = load_reference(opts.reference, in);
    const recon::Pipeline pipeline(pipeline_from_file(c, model), reference);
    ensure_dir(c.out);

    json report;
    report["frames"] = json::array();
    double mae_sum = 0.0;
    int mae_count = 0;
    for (std::size_t i = 0; i < in.frames.size(); ++i) {
        const auto& f = in.frames[i];
        recon::StageTimings t;
        const DepthMap depth = pipeline.process(io::load_pgm(f.image), &t);
        const std::string stem = f.image.stem().string();
        io::save_depth(c.out / (stem + ".depth"), depth);
        io::save_ply(c.out / (stem + ".ply"), recon::depth_to_pointcloud(depth, c.scenario.geom, c.cloud_threshold));

        json entry = {{"image", f.image.string()},
                      {"depth", stem + ".depth"},
                      {"ply", stem + ".ply"},
                      {"timings_ms",
                       {{"rectify", t.rectify_ms},
                        {"gray", t.gray_ms},
                        {"difference", t.difference_ms},
                        {"mapping", t.mapping_ms},
                        {"smoothing", t.smoothing_ms},
                        {"total", t.total()}}}};
        std::printf("%s: %.2f ms (rectify %.2f, difference %.2f, mapping %.2f, smoothing %.2f)", stem.c_str(),
                    t.total(), t.rectify_ms, t.difference_ms, t.mapping_ms, t.smoothing_ms);
        if (f.depth) {
            const double mae = mean_absolute_error(depth, io::load_depth(*f.depth));
            entry["mae_mm"] = mae;
            mae_sum += mae;
            ++mae_count;
            std::printf(", MAE %.4f mm", mae);
        }
        std::printf("\n");
        report["frames"].push_back(std::move(entry));
    }
    if (mae_count > 0) {
        report["mean_mae_mm"] = mae_sum / mae_count;
        std::printf("mean MAE %.4f mm over %d frame(s)\n", mae_sum / mae_count, mae_count);
    }
    io::write_file(c.out / "reconstruct.json", report.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

json timings_json(const recon::StageTimings& t)
{
    return {{"rectify", t.rectify_ms}, {"gray", t.gray_ms},           {"difference", t.difference_ms},
            {"mapping", t.mapping_ms}, {"smoothing", t.smoothing_ms}, {"total", t.total()}};
}

int cmd_evaluate(const CommonOptions& common, bool skip_tracking)
{
    const config::RunConfig c = resolve(common);
    ensure_dir(c.out);
    std::vector<sim::Scheme> schemes;
    if (common.scheme)
        schemes.push_back(c.scheme);
    else
        schemes.assign(std::begin(sim::kAllSchemes), std::end(sim::kAllSchemes));

    const auto t0 = std::chrono::steady_clock::now();
    const workflow::EvalReport report = workflow::evaluate(c.scenario, schemes);
    const std::string table = workflow::format_table(report);

    json out;
    out["seed"] = c.scenario.seed;
    out["noise_sigma"] = c.scenario.noise_sigma;
    out["schemes"] = json::array();
    for (const auto& s : report.schemes) {
        json e = {{"scheme", sim::scheme_name(s.scheme)},
                  {"reference_std", s.reference_std},
                  {"single_mae_mm", s.single_mae ? json(*s.single_mae) : json(nullptr)},
                  {"regression_mae_mm", s.regression_mae ? json(*s.regression_mae) : json(nullptr)},
                  {"timings_ms", timings_json(s.timings)}};
        if (!s.single_error.empty())
            e["single_error"] = s.single_error;
        if (!s.regression_error.empty())
            e["regression_error"] = s.regression_error;
        out["schemes"].push_back(std::move(e));
    }
    out["table"] = table;

    if (!skip_tracking) {
        const workflow::TrackResult track = workflow::run_tracking(c.scenario, c.tracking);
        json frames = json::array();
        for (const auto& f : track.frames)
            frames.push_back({{"truth_yaw_deg", f.truth.yawDegrees()},
                              {"yaw_deg", f.report.pose.yawDegrees()},
                              {"yaw_error_deg", f.yaw_error_deg},
                              {"translation_error_mm", f.translation_error_mm},
                              {"rmse_mm", f.report.rmse},
                              {"iterations", f.report.iterations}});
        out["tracking"] = {{"frames", frames},
                           {"max_yaw_error_deg", track.max_yaw_error_deg},
                           {"seconds", track.seconds}};
    }
    out["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    io::write_file(c.out / "eval_report.json", out.dump(2) + "\n");
    io::write_file(c.out / "eval_table.txt", table);
    std::cout << table;
    for (const auto& s : report.schemes) {
        if (!s.single_error.empty())
            std::cout << sim::scheme_name(s.scheme) << " single-image: " << s.single_error << "\n";
        if (!s.regression_error.empty())
            std::cout << sim::scheme_name(s.scheme) << " regression: " << s.regression_error << "\n";
    }
    if (out.contains("tracking"))
        std::printf("tracking: max yaw error %.3f deg over %zu frames\n",
                    out["tracking"]["max_yaw_error_deg"].get<double>(), out["tracking"]["frames"].size());
    return 0;
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

int cmd_track(const CommonOptions& common, const FrameOptions& opts, const std::string& calibration,
              const std::optional<std::string>& model_cloud)
{
    const config::RunConfig c = resolve(common);
    const auto& sc = c.scenario;
    const auto& tr = c.tracking;
    const Inputs in = expand_inputs(opts.inputs);
    if (in.frames.empty())
        throw ParameterError("track needs at least one frame");
    const io::CalibrationFile file = io::load_calibration(calibration);
    const recon::Pipeline pipeline(pipeline_from_file(c, file), load_reference(opts.reference, in));
    ensure_dir(c.out);

    const auto t0 = std::chrono::steady_clock::now();
    PointCloud model;
    if (model_cloud) {
        model = io::load_ply(*model_cloud);
    }
    else {
        const fs::path source = in.model_frame ? *in.model_frame : in.frames.front().image;
        model = workflow::jittered_contact_cloud(pipeline.process(io::load_pgm(source)), sc.geom,
                                                 tr.contact_threshold, tr.model_spacing, tr.model_seed);
    }
    std::vector<PointCloud> clouds;
    for (const auto& f : in.frames)
        clouds.push_back(workflow::contact_cloud(pipeline.process(io::load_pgm(f.image)), sc.geom,
                                                 tr.contact_threshold, tr.frame_stride));

    std::vector<pose::IcpReport> reports;
    if (model.empty()) {
        for (std::size_t k = 0; k < clouds.size(); ++k) {
            pose::IcpReport r;
            r.error = "model cloud has no contact points";
            reports.push_back(r);
        }
    }
    else {
        reports = pose::track_pose(clouds, model, tr.icp);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<io::PoseRecord> records;
    double max_err = 0.0;
    bool have_truth = false;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        records.push_back({static_cast<int>(k), r.converged, r.iterations, r.rmse, r.pose, r.error});
        std::printf("frame %zu: yaw %.3f deg, rmse %.4f mm, %d iterations%s%s", k, r.pose.yawDegrees(), r.rmse,
                    r.iterations, r.error.empty() ? "" : ", failed: ", r.error.c_str());
        if (in.frames[k].pose && r.error.empty()) {
            const double err = pose::yaw_error_modulo(r.pose.yawDegrees(), in.frames[k].pose->yawDegrees(),
                                                      tr.symmetry);
            max_err = std::max(max_err, err);
            have_truth = true;
            std::printf(", error %.3f deg", err);
        }
        std::printf("\n");
    }
    io::write_file(c.out / "poses.txt", io::encode_pose_report(records));
    std::printf("%zu frame(s) in %.3f s (%.1f frames/s)", reports.size(), seconds,
                seconds > 0.0 ? reports.size() / seconds : 0.0);
    if (have_truth)
        std::printf(", max yaw error %.3f deg", max_err);
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulation, calibration, reconstruction and tracking for a vision-based tactile sensor"};
    app.require_subcommand(1);

    CommonOptions sim_common, cal_common, rec_common, eval_common, track_common;
    SimOptions sim_opts;
    FrameOptions cal_opts, rec_opts, track_opts;
    std::optional<double> ball_radius, contact_only;
    std::string cal_file_rec, cal_file_track;
    std::optional<std::string> model_cloud;
    bool skip_tracking = false;

    auto* simulate = app.add_subcommand("simulate", "Render tactile frames and ground truth");
    add_common(simulate, sim_common);
    simulate->add_option("--mode", sim_opts.mode, "What to render")
        ->check(CLI::IsMember({"reference", "press", "calibration", "regression", "test", "object", "sequence"}));

    auto* calibrate = app.add_subcommand("calibrate", "Fit a depth model from ball-press frames");
    add_common(calibrate, cal_common);
    calibrate->add_option("--reference", cal_opts.reference, "Reference (no contact) PGM");
    calibrate->add_option("--ball-radius", ball_radius, "Calibration ball radius, mm");
    calibrate->add_option("inputs", cal_opts.inputs, "Press PGMs or manifest.json files")->required();

    auto* reconstruct = app.add_subcommand("reconstruct", "Depth maps and point clouds from contact frames");
    add_common(reconstruct, rec_common);
    reconstruct->add_option("--calibration", cal_file_rec, "Calibration file")->required()->check(CLI::ExistingFile);
    reconstruct->add_option("--reference", rec_opts.reference, "Reference (no contact) PGM");
    reconstruct->add_option("--contact-only", contact_only, "Keep only points deeper than this, mm");
    reconstruct->add_option("inputs", rec_opts.inputs, "Contact PGMs or manifest.json files")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Closed-loop accuracy study over illumination schemes");
    add_common(evaluate, eval_common);
    evaluate->add_flag("--no-tracking", skip_tracking, "Skip the nut tracking run");

    auto* track = app.add_subcommand("track", "Track an object's pose across contact frames");
    add_common(track, track_common);
    track->add_option("--calibration", cal_file_track, "Calibration file")->required()->check(CLI::ExistingFile);
    track->add_option("--reference", track_opts.reference, "Reference (no contact) PGM");
    track->add_option("--model-cloud", model_cloud, "Model point cloud (PLY)")->check(CLI::ExistingFile);
    track->add_option("inputs", track_opts.inputs, "Frame PGMs or manifest.json files")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        std::cerr << "dtact: error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim_common, sim_opts);
        if (calibrate->parsed())
            return cmd_calibrate(cal_common, cal_opts, ball_radius);
        if (reconstruct->parsed())
            return cmd_reconstruct(rec_common, rec_opts, cal_file_rec, contact_only);
        if (evaluate->parsed())
            return cmd_evaluate(eval_common, skip_tracking);
        if (track->parsed())
            return cmd_track(track_common, track_opts, cal_file_track, model_cloud);
    }
    catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& ch : msg)
            if (ch == '\n')
                ch = ' ';
        std::cerr << "dtact: error: " << msg << "\n";
        return 1;
    }
    return 1;
}
