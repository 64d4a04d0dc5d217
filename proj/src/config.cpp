#include "dtact/config.hpp"

#include <set>

#include "dtact/io.hpp"
#include "json.hpp"

namespace dtact::config {

using nlohmann::json;

Method parse_method(std::string_view name)
{
    if (name == "single")
        return Method::Single;
    if (name == "regression")
        return Method::Regression;
    throw ParameterError("unknown method \"" + std::string(name) + "\" (expected single or regression)");
}

std::string method_name(Method method) { return method == Method::Single ? "single" : "regression"; }

namespace {

constexpr std::pair<SimMode, const char*> kModes[] = {
    {SimMode::Reference, "reference"}, {SimMode::Press, "press"},   {SimMode::Calibration, "calibration"},
    {SimMode::Regression, "regression"}, {SimMode::Test, "test"},   {SimMode::Object, "object"},
    {SimMode::Sequence, "sequence"},
};

/// Reads one JSON object, remembering which keys were consumed.
class Reader
{
  public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail("must be an object");
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParameterError("config " + (path_.empty() ? std::string("root") : path_) + ": " + what);
    }

    bool has(const char* key) const { return j_.contains(key); }

    template <typename T>
    void get(const char* key, T& out)
    {
        if (!j_.contains(key))
            return;
        used_.insert(key);
        try {
            out = j_.at(key).get<T>();
        }
        catch (const json::exception&) {
            throw ParameterError("config " + child(key) + ": wrong type");
        }
    }

    Reader sub(const char* key)
    {
        used_.insert(key);
        return Reader(j_.at(key), child(key));
    }

    const json& raw(const char* key)
    {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items())
            if (!used_.contains(key))
                throw ParameterError("config " + child(key.c_str()) + ": unknown key");
    }

    std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

}  // namespace

SimMode parse_sim_mode(std::string_view name)
{
    for (const auto& [mode, text] : kModes)
        if (name == text)
            return mode;
    throw ParameterError("unknown simulate mode \"" + std::string(name) + "\"");
}

std::string sim_mode_name(SimMode mode)
{
    for (const auto& [m, text] : kModes)
        if (m == mode)
            return text;
    return "?";
}

RunConfig parse_config(std::string_view json_text, RunConfig base)
{
    json root;
    try {
        root = json::parse(json_text);
    }
    catch (const json::parse_error& e) {
        throw io::ParseError(std::string("invalid JSON config: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
    }
    RunConfig c = std::move(base);
    auto& sc = c.scenario;
    Reader r(root, "");

    r.get("seed", sc.seed);
    if (r.has("out")) {
        std::string out;
        r.get("out", out);
        c.out = out;
    }
    r.get("noise_sigma", sc.noise_sigma);
    r.get("reference_frames", sc.reference_frames);
    r.get("calibration_frames", sc.calibration_frames);
    r.get("cloud_threshold", c.cloud_threshold);

    if (r.has("geometry")) {
        Reader g = r.sub("geometry");
        int rw = sc.geom.rawWidth(), rh = sc.geom.rawHeight(), n = sc.geom.cropSize();
        double field = sc.geom.fieldMm();
        g.get("raw_width", rw);
        g.get("raw_height", rh);
        g.get("crop_size", n);
        g.get("field_mm", field);
        g.finish();
        sc.geom = SensorGeometry(rw, rh, n, field);
    }
    if (r.has("camera")) {
        Reader cam = r.sub("camera");
        auto& m = sc.camera;
        cam.get("fx", m.fx);
        cam.get("fy", m.fy);
        cam.get("cx", m.cx);
        cam.get("cy", m.cy);
        cam.get("k1", m.k1);
        cam.get("k2", m.k2);
        cam.get("k3", m.k3);
        cam.get("p1", m.p1);
        cam.get("p2", m.p2);
        cam.finish();
    }
    if (r.has("optics")) {
        Reader o = r.sub("optics");
        o.get("thickness", sc.optics.thickness);
        o.get("attenuation", sc.optics.attenuation);
        o.get("gain", sc.optics.gain);
        o.get("ambient", sc.optics.ambient);
        o.finish();
    }
    if (r.has("illumination")) {
        Reader il = r.sub("illumination");
        if (il.has("scheme")) {
            std::string s;
            il.get("scheme", s);
            c.scheme = sim::parse_scheme(s);
        }
        il.get("led_sigma", sc.led_sigma);
        il.finish();
    }
    if (r.has("pipeline")) {
        Reader p = r.sub("pipeline");
        p.get("gaussian_kernel", sc.gaussian_kernel);
        p.get("gaussian_passes", sc.gaussian_passes);
        p.get("gaussian_sigma", sc.gaussian_sigma);
        p.finish();
    }
    if (r.has("calibration")) {
        Reader cal = r.sub("calibration");
        if (cal.has("method")) {
            std::string m;
            cal.get("method", m);
            c.method = parse_method(m);
        }
        cal.get("ball_radius", c.ball_radius);
        cal.get("circle_threshold", sc.circle_threshold);
        if (cal.has("regression_center")) {
            std::vector<double> center;
            cal.get("regression_center", center);
            if (center.size() != 2)
                cal.fail("regression_center must be [u, v]");
            c.regression_center = Eigen::Vector2d(center[0], center[1]);
        }
        cal.finish();
    }
    if (r.has("protocol")) {
        Reader p = r.sub("protocol");
        auto& pr = sc.protocol;
        p.get("calibration_radius", pr.calibration_radius);
        p.get("calibration_depth", pr.calibration_depth);
        p.get("calibration_offset", pr.calibration_offset);
        p.get("regression_presses", pr.regression_presses);
        p.get("regression_radius", pr.regression_radius);
        p.get("regression_depth_min", pr.regression_depth_min);
        p.get("regression_depth_max", pr.regression_depth_max);
        p.get("regression_offset", pr.regression_offset);
        p.get("test_presses", pr.test_presses);
        p.get("test_radius", pr.test_radius);
        p.get("test_depth_min", pr.test_depth_min);
        p.get("test_depth_max", pr.test_depth_max);
        p.get("test_offset", pr.test_offset);
        p.finish();
    }
    if (r.has("simulate")) {
        Reader s = r.sub("simulate");
        if (s.has("mode")) {
            std::string m;
            s.get("mode", m);
            c.sim_mode = parse_sim_mode(m);
        }
        if (s.has("press")) {
            Reader p = s.sub("press");
            p.get("x", c.press.center.x);
            p.get("y", c.press.center.y);
            p.get("ball_radius", c.press.ball_radius);
            p.get("d_max", c.press.d_max);
            p.finish();
        }
        if (s.has("object")) {
            Reader o = s.sub("object");
            if (o.has("kind")) {
                std::string k;
                o.get("kind", k);
                c.object.kind = sim::parse_object_kind(k);
            }
            o.get("x", c.object.center.x);
            o.get("y", c.object.center.y);
            o.get("rotation_deg", c.object.rotation_deg);
            o.get("depth", c.object.depth);
            o.get("size", c.object.size);
            o.get("diameter", c.object.diameter);
            o.finish();
        }
        s.finish();
    }
    if (r.has("tracking")) {
        Reader t = r.sub("tracking");
        auto& tr = c.tracking;
        t.get("frames", tr.frames);
        t.get("step_deg", tr.step_deg);
        t.get("noise_sigma", tr.noise_sigma);
        t.get("symmetry", tr.symmetry);
        t.get("contact_threshold", tr.contact_threshold);
        t.get("model_spacing", tr.model_spacing);
        t.get("frame_stride", tr.frame_stride);
        t.get("model_seed", tr.model_seed);
        t.get("max_iter", tr.icp.max_iter);
        t.get("tol_mm", tr.icp.tol_mm);
        t.get("reject_factor", tr.icp.reject_factor);
        t.get("accelerate", tr.icp.accelerate);
        t.finish();
    }
    r.finish();
    c.tracking.object = c.object;
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    const std::string text = io::read_file(path);
    try {
        return parse_config(text, std::move(base));
    }
    catch (const io::ParseError& e) {
        throw io::ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

std::string to_json(const RunConfig& c)
{
    const auto& sc = c.scenario;
    const auto& pr = sc.protocol;
    json j;
    j["seed"] = sc.seed;
    j["out"] = c.out.string();
    j["noise_sigma"] = sc.noise_sigma;
    j["reference_frames"] = sc.reference_frames;
    j["calibration_frames"] = sc.calibration_frames;
    j["cloud_threshold"] = c.cloud_threshold;
    j["geometry"] = {{"raw_width", sc.geom.rawWidth()},
                     {"raw_height", sc.geom.rawHeight()},
                     {"crop_size", sc.geom.cropSize()},
                     {"field_mm", sc.geom.fieldMm()}};
    j["camera"] = {{"fx", sc.camera.fx}, {"fy", sc.camera.fy}, {"cx", sc.camera.cx}, {"cy", sc.camera.cy},
                   {"k1", sc.camera.k1}, {"k2", sc.camera.k2}, {"k3", sc.camera.k3}, {"p1", sc.camera.p1},
                   {"p2", sc.camera.p2}};
    j["optics"] = {{"thickness", sc.optics.thickness},
                   {"attenuation", sc.optics.attenuation},
                   {"gain", sc.optics.gain},
                   {"ambient", sc.optics.ambient}};
    j["illumination"] = {{"scheme", sim::scheme_name(c.scheme)}, {"led_sigma", sc.led_sigma}};
    j["pipeline"] = {{"gaussian_kernel", sc.gaussian_kernel},
                     {"gaussian_passes", sc.gaussian_passes},
                     {"gaussian_sigma", sc.gaussian_sigma}};
    j["calibration"] = {{"method", method_name(c.method)},
                        {"ball_radius", c.ball_radius},
                        {"circle_threshold", sc.circle_threshold}};
    if (c.regression_center)
        j["calibration"]["regression_center"] = {c.regression_center->x(), c.regression_center->y()};
    j["protocol"] = {{"calibration_radius", pr.calibration_radius},
                     {"calibration_depth", pr.calibration_depth},
                     {"calibration_offset", pr.calibration_offset},
                     {"regression_presses", pr.regression_presses},
                     {"regression_radius", pr.regression_radius},
                     {"regression_depth_min", pr.regression_depth_min},
                     {"regression_depth_max", pr.regression_depth_max},
                     {"regression_offset", pr.regression_offset},
                     {"test_presses", pr.test_presses},
                     {"test_radius", pr.test_radius},
                     {"test_depth_min", pr.test_depth_min},
                     {"test_depth_max", pr.test_depth_max},
                     {"test_offset", pr.test_offset}};
    j["simulate"] = {{"mode", sim_mode_name(c.sim_mode)},
                     {"press",
                      {{"x", c.press.center.x},
                       {"y", c.press.center.y},
                       {"ball_radius", c.press.ball_radius},
                       {"d_max", c.press.d_max}}},
                     {"object",
                      {{"kind", sim::object_kind_name(c.object.kind)},
                       {"x", c.object.center.x},
                       {"y", c.object.center.y},
                       {"rotation_deg", c.object.rotation_deg},
                       {"depth", c.object.depth},
                       {"size", c.object.size},
                       {"diameter", c.object.diameter}}}};
    const auto& tr = c.tracking;
    j["tracking"] = {{"frames", tr.frames},
                     {"step_deg", tr.step_deg},
                     {"noise_sigma", tr.noise_sigma},
                     {"symmetry", tr.symmetry},
                     {"contact_threshold", tr.contact_threshold},
                     {"model_spacing", tr.model_spacing},
                     {"frame_stride", tr.frame_stride},
                     {"model_seed", tr.model_seed},
                     {"max_iter", tr.icp.max_iter},
                     {"tol_mm", tr.icp.tol_mm},
                     {"reject_factor", tr.icp.reject_factor},
                     {"accelerate", tr.icp.accelerate}};
    return j.dump(2);
}

void validate(const RunConfig& c)
{
    const auto& sc = c.scenario;
    sc.optics.validate();
    sc.camera.validate();
    if (sc.geom.cropSize() > sc.geom.rawWidth() || sc.geom.cropSize() > sc.geom.rawHeight())
        throw ParameterError("crop window does not fit in the raw frame");
    if (!(sc.geom.fieldMm() > 0.0) || sc.geom.cropSize() < 1)
        throw ParameterError("sensing field must be positive");
    if (sc.noise_sigma < 0.0 || c.tracking.noise_sigma < 0.0)
        throw ParameterError("noise_sigma must be non-negative");
    if (sc.reference_frames < 1 || sc.calibration_frames < 1)
        throw ParameterError("frame averaging counts must be at least 1");
    if (!(sc.led_sigma > 0.0))
        throw ParameterError("led_sigma must be positive");
    if (!(c.ball_radius > 0.0))
        throw ParameterError("ball_radius must be positive");
    if (c.tracking.frames < 1)
        throw ParameterError("tracking.frames must be at least 1");
    if (c.tracking.symmetry < 1)
        throw ParameterError("tracking.symmetry must be at least 1");
    if (c.tracking.icp.max_iter < 1)
        throw ParameterError("tracking.max_iter must be at least 1");
    recon::PipelineConfig pc = workflow::pipeline_config(sc, calib::MappingList());
    pc.validate();
}

}  // namespace dtact::config
