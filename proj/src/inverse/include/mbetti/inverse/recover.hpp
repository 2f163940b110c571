#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mbetti/inverse/blagov.hpp"

namespace mbetti {

enum class Window {
    cesaro, ///< trapezoid mean over [0, T]
    kaiser, ///< normalized Kaiser-Bessel window over [0, T]
};

struct Averaging {
    double T = 0.0;
    Window window = Window::kaiser;
    double beta = 12.0; ///< Kaiser shape parameter
};

/// Quadrature weights over t_j = j * step, j = 0 .. T/step, summing to one.
std::vector<double> averaging_weights(const Averaging& avg, double step);

/// Window average of I^k_{f,h}(0, t) over [0, T]: approximates (Pi^k w^{f,k}(0), w^{h,k}(0)).
double projected_inner(BoundaryInnerProducts& bip, int f, int h, int k, const Averaging& avg);

struct ProjectedGram {
    int degree = 0;
    std::vector<int> sources;
    Averaging averaging;
    Eigen::MatrixXd P;            ///< symmetrized
    double asymmetry = 0.0;       ///< max |P - P^T| / max |P| before symmetrization
    std::vector<double> energies; ///< I^k_jj(0, 0) = |w^{j,k}(0)|^2
};

ProjectedGram gram_matrix(BoundaryInnerProducts& bip, const std::vector<int>& sources, int k, const Averaging& avg,
                          int threads = 1);

struct RankEstimate {
    int rank = 0;
    int gram_schmidt_rank = 0;
    int eigen_rank = 0;
    std::vector<double> eigenvalues; ///< descending
    double threshold = 0.0;          ///< tau_rel * max energy
    double gap_ratio = 0.0;          ///< last kept / first discarded eigenvalue (inf if none discarded or none kept)
};

/// Gram-Schmidt (reject when the residual squared norm is below tau_rel times
/// the largest unprojected energy) and eigenvalue counting (keep eigenvalues
/// above the same threshold, with a min_gap ratio at the cut). Throws
/// AmbiguousRankError when they disagree or the gap is too small. Energies at
/// or below `energy_floor` count as zero (degrees without interior unknowns).
RankEstimate count_dimension(const ProjectedGram& P, double tau_rel = 1e-4, double min_gap = 10.0,
                             double energy_floor = 0.0);

struct RecoverSpec {
    int initial_sources = 4;
    int max_sources = 64;            ///< cap for the doubling; also limited by the dataset
    std::vector<double> T_sweep;     ///< increasing; empty: {horizon/2, horizon}
    Window window = Window::kaiser;
    double beta = 12.0;
    double tau_rel = 1e-4;
    double min_gap = 10.0;
    /// Degree energies below this fraction of the largest energy over all degrees are round-off.
    double energy_floor = 1e-10;
    /// Energies below this absolute value are round-off whatever the scale.
    double absolute_floor = 1e-14;
    int threads = 1;
};

struct DegreeDiagnostics {
    int degree = 0;
    int n_sources = 0;
    double T = 0.0;
    RankEstimate estimate;
    double asymmetry = 0.0;
};

struct BettiReport {
    std::string method; ///< complete-dirac | physical-maxwell
    bool converged = false;
    std::string failure; ///< set when !converged
    std::array<int, 4> relative{-1, -1, -1, -1}; ///< dim H_D^k; -1 when not determined
    std::array<int, 4> betti{-1, -1, -1, -1};    ///< absolute beta_k
    int chi_boundary = 0;
    int chi = 0;
    int sources_used = 0;
    double T_used = 0.0;
    std::vector<DegreeDiagnostics> diagnostics; ///< final round, per degree
    std::vector<nlohmann::json> history;        ///< counts per (n_sources, T)

    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;
    void write_ladders_csv(const std::filesystem::path& path) const;
};

/// Betti numbers from a complete-Dirac dataset; beta_{3-k}(M) = dim H_D^k.
BettiReport betti_from_dirac(BoundaryInnerProducts& bip, const RecoverSpec& spec = {});

/// beta_1(M) = dim H_D^2 from a physical-Maxwell dataset; the report also
/// carries beta_2 from the boundary Euler characteristic.
BettiReport beta1_physical(BoundaryInnerProducts& bip, const RecoverSpec& spec = {});

/// beta_2 = chi(dM)/2 - 1 + beta_1 for connected M with nonempty boundary.
int beta2_from_boundary(int beta1, const BoundaryPatch& boundary);

} // namespace mbetti
