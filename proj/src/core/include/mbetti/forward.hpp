#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mbetti/boundary/dataset.hpp"
#include "mbetti/dirac.hpp"

namespace mbetti {

/// Smooth bump exp(-1/(1-x^2)), x = (t - center)/half_width, and its time derivative.
double bump_value(double t, double center, double half_width);
double bump_rate(double t, double center, double half_width);

struct SourceSpec {
    double tau = 4.0;      ///< sources vanish outside (-tau, 0)
    double dt = 1.0 / 16;  ///< grid step; tau must be an integer multiple
    double t_end = 16.0;   ///< last grid time
    std::array<bool, 3> degrees{true, true, true};
    /// Support of the bump inside (-tau + margin, -margin); default tau/8.
    double margin = -1.0;
    /// Degree-1 profiles are projected onto closed boundary cochains (d_boundary h = 0),
    /// so the physical source has no degree-2 trace.
    bool closed = false;

    TimeGrid grid() const;
};

/// Random unit-norm spatial profiles on the inner simplices of Gamma, one
/// term per enabled degree, times the bump. Deterministic in `seed`.
BoundarySource make_source(const BoundaryPatch& patch, std::uint64_t seed, const SourceSpec& spec);

/// (0, h, -int d_boundary h): running integral of h by the trapezoid rule.
BoundarySource physical_source(const BoundaryPatch& patch, const BoundarySource& h);

struct Trajectory {
    TimeGrid grid;
    std::vector<CochainState> states; ///< full states (interior + boundary), if kept
    BoundaryRecord record;
    double leakage = 0.0;             ///< max over time of |w^0|+|w^3| relative to |w| (interior G-norms plus source coefficients)
};

/// Implicit-midpoint (Cayley) integrator for the boundary-driven system.
///
/// Interior DOFs evolve by G_II v' + A_II v = -G_IB f' - A_IB f; boundary
/// DOFs equal the source. Record column i holds n^k = -rho^{k-1} with
/// rho = [G (w_{i+1} - w_i)/dt + A (w_{i+1} + w_i)/2]_B, the boundary
/// residual of the step t_i -> t_{i+1} (the source is held constant past the grid).
class ForwardSolver {
public:
    /// Keeps a copy of the operators; independent of the arguments' lifetime.
    ForwardSolver(const SimplicialComplex3& c, const DiracSystem& sys, double dt);

    double dt() const { return dt_; }
    const DiracSystem& system() const;
    const BoundaryPatch& patch() const;
    int interior_size() const { return n_int_; }
    int boundary_size() const { return n_bnd_; }

    /// Full state with boundary DOFs equal to f(t_i) and zero elsewhere.
    CochainState lift(const BoundarySource& f, int i) const;

    /// Evolves from v(-tau) = 0 over the source grid. `record` selects which
    /// normal traces n^k (k = 1..3) are stored on the Gamma closure.
    Trajectory evolve(const BoundarySource& f, std::array<bool, 4> record = {false, true, true, true},
                      bool keep_states = false) const;

    /// Cayley steps with no boundary forcing from a given relative state.
    Eigen::VectorXd step_free(const Eigen::VectorXd& v, int steps) const;

    Eigen::VectorXd boundary_vector(const BoundarySource& f, int i, bool rate) const;
    CochainState assemble_state(const Eigen::VectorXd& v, const Eigen::VectorXd& fb) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    double dt_;
    int n_int_ = 0, n_bnd_ = 0;
    std::array<int, 4> b_offset_{};
};

BoundaryRecord response(const ForwardSolver& solver, const BoundarySource& f);
/// Degree-2 normal trace of the physical source built from h; warns on sector leakage above 1e-9.
BoundaryRecord physical_response(const ForwardSolver& solver, const BoundarySource& h, double* leakage = nullptr);

/// Hash of mesh, Gamma and materials.
std::string fingerprint(const SimplicialComplex3& c, const MaterialField& mat);

enum class DatasetMethod { complete_dirac, physical_maxwell };

struct DatasetSpec {
    SourceSpec source;
    int n_sources = 4;
    std::uint64_t seed = 1;
    DatasetMethod method = DatasetMethod::complete_dirac;
    int threads = 1;
};

/// Seeds of source j are derived from spec.seed and j only.
ResponseDataset simulate_dataset(const SimplicialComplex3& c, const MaterialField& mat, const DatasetSpec& spec);

} // namespace mbetti
