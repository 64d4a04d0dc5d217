#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dtact/sim.hpp"
#include "dtact/workflow.hpp"

namespace dtact::config {

enum class Method
{
    Single,
    Regression,
};

Method parse_method(std::string_view name);
std::string method_name(Method method);

/// What `simulate` renders.
enum class SimMode
{
    Reference,    // the unpressed reference
    Press,        // one ball press
    Calibration,  // the near-center single-image calibration press
    Regression,   // the regression calibration presses
    Test,         // the test presses
    Object,       // one synthetic object
    Sequence,     // an object rotating in plane
};

SimMode parse_sim_mode(std::string_view name);
std::string sim_mode_name(SimMode mode);

struct RunConfig
{
    workflow::Scenario scenario;
    sim::Scheme scheme = sim::Scheme::Standard;
    Method method = Method::Single;

    SimMode sim_mode = SimMode::Press;
    workflow::BallPress press;       // SimMode::Press
    sim::ObjectSpec object{sim::ObjectKind::HexNut, {0.0, 0.0}, 0.0, 0.5};

    /// Ball radius for calibration frames that do not carry one.
    double ball_radius = 4.0;
    /// Regression center in crop pixels; defaults per scheme.
    std::optional<Eigen::Vector2d> regression_center;

    /// Contact filter for PLY export; negative keeps the full grid.
    double cloud_threshold = -1.0;

    workflow::TrackingScenario tracking;
    std::filesystem::path out = "out";
};

/// Parses a JSON configuration on top of the defaults. Unknown keys are
/// rejected so that typos do not silently fall back to defaults.
RunConfig parse_config(std::string_view json_text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Effective configuration as JSON, for manifests.
std::string to_json(const RunConfig& config);

/// Cross-field checks: optics, geometry, pipeline and press parameters.
void validate(const RunConfig& config);

}  // namespace dtact::config
