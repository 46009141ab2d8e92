#pragma once

#include "pfem/flow_solver.hpp"
#include "pfem/lagrangian.hpp"
#include "pfem/refine.hpp"
#include "pfem/size_field.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pfem {

enum class ScenarioKind {
    hydrostatic,
    sloshing,
    vortex_box_bubble,
    vortex_box_hole,
    rising_bubble,
    falling_drop,
    dam_break_dry,
    dam_break_wet,
};

enum class CflPolicy { error, clamp };

const char* to_string(ScenarioKind k);
const char* to_string(CflPolicy p);

struct Probe {
    std::string name;
    Point2 location;
};

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::hydrostatic;
    double h_fs = 0.02;
    double h_max = 0.08;
    double gradation = 0.3;
    double alpha_threshold = 1.2;
    double dt = 1e-3;
    double t_end = 1.0;
    CflPolicy cfl_policy = CflPolicy::error;
    // Rotational sweep limit: dt is clamped to sweep_beta / max elementwise
    // vorticity. The explicit move changes enclosed areas by dt^2 * det(grad u)
    // per unit area; in rotation-dominated zones (curling jets) that term
    // inflates the fluid unless dt tracks 1/omega. Zero disables the clamp.
    double sweep_beta = 0.05;
    std::string out_dir = "out";
    int output_every = 10;
    bool adapt_enabled = true;
    bool write_meshes = true;
    PhysicalParams phys;
    RefineParams refine;
    std::vector<Probe> probes;
    std::map<std::string, double> geometry;  // scenario-specific lengths
    double vortex_period = 5.0;
    double eta_probe_x = 0.0;  // where the wave height is sampled

    double geom(const std::string& key) const;
};

/// Flat key = value configuration text; unknown keys are rejected with the
/// offending line number and defaults are filled per scenario.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);
/// Resolved configuration (defaults included) for provenance.
std::string config_echo(const ScenarioConfig& cfg);

// ---- analytic oracles -----------------------------------------------------

/// Linearized standing-wave amplitude ratio eta(t)/eta_0 for a container
/// with kinematic viscosity nu, wavenumber k and gravity g.
double sloshing_wave_ratio(double t, double nu, double k, double g);

/// Single-vortex velocity field on [0,1]^2 with time reversal of period T.
Vec2 vortex_velocity(Point2 x, double t, double period);

/// P1 pressure interpolation at a location; empty when the location is in a
/// dry region or outside the mesh.
std::optional<double> probe_pressure(const TriMesh& mesh, const FluidDomain& domain,
                                     const FlowState& state, Point2 location);

// ---- scenario construction (exposed for tests) ----------------------------

struct ScenarioSetup {
    ParticleSet particles;
    WallGeometry walls;
    // closed polylines bounding the initial fluid (even-odd classification)
    std::vector<std::vector<Point2>> fluid_region;
    // initial free-surface sample points (subset of particle positions)
    std::vector<Point2> initial_surface;
};

ScenarioSetup build_setup(const ScenarioConfig& cfg);

/// Bootstrapped initial state: boundary cloud adapted to the size field with
/// the initial conditions applied.
struct BootstrapResult {
    TriMesh mesh;
    FluidDomain domain;
    ParticleSet particles;
    FlowState state;
    SizeField size_field;
};
BootstrapResult bootstrap(const ScenarioConfig& cfg, const ScenarioSetup& setup);

// ---- the main loop ---------------------------------------------------------

struct TimeSeriesRow {
    double t = 0.0;
    double volume = 0.0;
    double rel_vol_var = 0.0;
    int n_bubbles = 0;
    std::vector<double> probe_values;  // NaN marks a dry probe
    double eta = 0.0;                  // NaN when no surface crosses the probe line
    double div_l2 = 0.0;
    double max_bubble_flux = 0.0;
    // extra diagnostics (not part of the CSV contract)
    double bubble_volume_total = 0.0;
    Point2 bubble_centroid;
    double max_speed = 0.0;
    double fluid_perimeter = 0.0;
};

struct RunResult {
    std::vector<TimeSeriesRow> rows;
    double initial_volume = 0.0;
    double max_rel_volume_variation = 0.0;
    int steps = 0;
    double final_time = 0.0;
};

/// Executes the scenario loop (triangulate, classify, adapt, solve, move)
/// and writes the time series, mesh snapshots and provenance files into the
/// output directory (PFEM_OUT overrides cfg.out_dir). Throws on numerical
/// failure after writing a final-state dump.
RunResult run_scenario(const ScenarioConfig& cfg);

} // namespace pfem
