#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbetti/boundary/patch.hpp"

namespace mbetti {

/// Uniform time grid t_i = start + i * step, i = 0 .. size-1.
struct TimeGrid {
    double start = 0.0;
    double step = 1.0;
    int size = 0;

    double time(int i) const { return start + step * i; }
    double end() const { return time(size - 1); }
    /// Index of the grid point at time t; throws if t is not (within 1e-9 step) on the grid.
    int index_of(double t) const;
    bool operator==(const TimeGrid& o) const;
};

/// One separable component a(t) * profile of a boundary source, living on
/// boundary simplices of a single degree (0, 1 or 2).
struct SourceTerm {
    int degree = 0;
    Eigen::VectorXd profile;   // indexed by boundary simplices of `degree`
    std::vector<double> value; // a(t_i)
    std::vector<double> rate;  // a'(t_i), analytic where available
};

/// Tangential boundary data f = (f^0, f^1, f^2) sampled on a time grid.
struct BoundarySource {
    TimeGrid grid;
    std::vector<SourceTerm> terms;
    double tau = 0.0;          // all terms vanish for t <= -tau and t >= 0
    double bump_center = 0.0;  // generating bump parameters (metadata)
    double bump_half_width = 0.0;
    unsigned long long seed = 0;

    /// f^k(t_i) on all boundary k-simplices.
    Eigen::VectorXd sample(int degree, int i, int n_simplices) const;
    Eigen::VectorXd sample_rate(int degree, int i, int n_simplices) const;
    bool has_degree(int degree) const;
    bool is_zero() const;

    BoundarySource operator+(const BoundarySource& other) const;
    BoundarySource scaled(double c) const;
};

/// Normal traces n w^k (k = 1, 2, 3) on Gamma; normal[k] has one row per
/// simplex of patch.support(k-1) and one column per grid time. Unrecorded
/// degrees are empty matrices.
struct BoundaryRecord {
    TimeGrid grid;
    std::array<Eigen::MatrixXd, 4> normal;

    bool has_degree(int k) const { return normal[k].size() > 0; }
};

struct DatasetEntry {
    BoundarySource source;
    BoundaryRecord record;
};

/// The only data the inverse side ever sees: Gamma, the boundary surface,
/// known sources and the recorded normal traces.
struct ResponseDataset {
    BoundaryPatch patch;
    TimeGrid grid;
    double tau = 0.0;
    std::string fingerprint;
    std::string method = "complete-dirac"; // or "physical-maxwell"
    std::string integrator = "cayley-implicit-midpoint";
    std::vector<DatasetEntry> entries;

    /// Checks the shared-grid invariant and Gamma support of every source term.
    void validate() const;

    /// Writes `<path>` (JSON header) and `<path>.bin` (little-endian float64 payload).
    void save(const std::filesystem::path& path) const;
    static ResponseDataset load(const std::filesystem::path& path);
};

} // namespace mbetti
