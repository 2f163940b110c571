#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbetti/forward.hpp"
#include "mbetti/inverse/recover.hpp"

namespace mbetti {

/// One JSON file per run; every random choice derives from `seed`.
struct Scenario {
    std::string name = "scenario";

    /// single_tet | ball | solid_torus | tunneled_box | file
    std::string mesh = "solid_torus";
    int refinement = 0; ///< ball refinement, solid_torus refinement, tunneled_box resolution
    int segments = 4;   ///< solid_torus ring segments
    int tunnels = 1;    ///< tunneled_box tunnel count
    std::filesystem::path mesh_file;

    /// random | identity | file
    std::string materials = "random";
    double condition = 10.0;
    std::filesystem::path material_file;

    double gamma = 1.0; ///< fraction of boundary faces in Gamma; 1 selects the whole boundary
    int gamma_seed = 0;

    double dt = 1.0 / 16;
    double tau = 4.0;
    double T_max = 0.0;        ///< averaging horizon; 0 plans ceil(gap_factor / gap), or 2 tau without spectrum
    double gap_factor = 50.0;
    std::vector<double> T_sweep; ///< increasing, last entry <= T_max; empty uses the recover default

    int n_sources = 8;
    int initial_sources = 4;
    std::uint64_t seed = 1;

    /// complete-dirac | physical-maxwell | corollary
    std::string method = "complete-dirac";

    std::filesystem::path out = "out";

    static Scenario from_json(const nlohmann::json& j);
    static Scenario load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    /// Throws ValidationError naming the offending field.
    void validate() const;
};

struct RunOptions {
    int threads = 1;
    bool dump_grids = false;
    std::filesystem::path out; ///< overrides Scenario::out when non-empty
};

struct ScenarioSetup {
    SimplicialComplex3 complex;
    MaterialField materials;
    DiracSystem system;
    double gap = 0.0;
    double T = 0.0; ///< planned averaging horizon
};

/// Builds the mesh, Gamma, materials and operator, and plans T from the spectral gap.
ScenarioSetup prepare(const Scenario& s);

DatasetSpec dataset_spec(const Scenario& s, const ScenarioSetup& setup, int threads = 1);
RecoverSpec recover_spec(const Scenario& s, int threads = 1);

struct RunResult {
    BettiReport report;
    std::array<int, 4> oracle{};
    std::array<bool, 4> match{};
    bool pass = false;
    nlohmann::json comparison;
};

/// Forward simulation, boundary-only recovery and oracle comparison. Writes
/// betti_report.json, oracle_comparison.json and diagnostics/*.csv under the output directory.
RunResult run_scenario(const Scenario& s, const RunOptions& opt = {});

struct CheckItem {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

/// Invariant suites without recovery: mesh validity, discrete Stokes and
/// adjointness, energy conservation, kernel dimensions, Blagovestchenskii
/// reconstruction against interior states. Writes verify_report.json.
std::vector<CheckItem> verify_scenario(const Scenario& s, const RunOptions& opt = {});

nlohmann::json checklist_json(const std::vector<CheckItem>& items);

/// {"kind", "message"} for errors.json.
nlohmann::json error_json(const std::exception& e);

} // namespace mbetti
