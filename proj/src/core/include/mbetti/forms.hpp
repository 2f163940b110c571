#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mbetti/mesh.hpp"

namespace mbetti {

using SpMat = Eigen::SparseMatrix<double>;
using IntSpMat = Eigen::SparseMatrix<int>;

/// Piecewise-constant anisotropic permittivity and permeability.
struct MaterialField {
    std::vector<Eigen::Matrix3d> eps;
    std::vector<Eigen::Matrix3d> mu;

    static MaterialField identity(int n_tets);
    /// Random SPD tensors with log-uniform eigenvalues in [1/sqrt(c), sqrt(c)] and random axes.
    static MaterialField random(int n_tets, double condition_bound, std::uint64_t seed);
    static MaterialField load(const std::filesystem::path& path, int n_tets);
    void save(const std::filesystem::path& path) const;

    int size() const { return static_cast<int>(eps.size()); }
    /// Throws MaterialError naming the first non-SPD tensor.
    void validate() const;
};

/// Covariant metric g with g^{-1} = m g0^{-1} / det m.
Eigen::Matrix3d material_metric(const Eigen::Matrix3d& m, const Eigen::Matrix3d& g0 = Eigen::Matrix3d::Identity());

/// Signed incidence d_k : C^k -> C^{k+1}, k = 0..2.
IntSpMat coboundary(const SimplicialComplex3& c, int k);

/// Whitney k-form mass matrix in the metric g_mu (k = 0, 2) or g_eps (k = 1, 3).
SpMat assemble_mass(const SimplicialComplex3& c, const MaterialField& mat, int k);

/// Whitney basis functions on one tetrahedron, written as sum_a lambda_a C[:, a].
/// Edge and face functions carry the global orientation of their simplex.
struct WhitneyElement {
    double volume = 0.0;
    Eigen::Matrix<double, 3, 4> grad; // gradients of the barycentric coordinates
    std::array<Eigen::Matrix<double, 3, 4>, 6> edge;
    std::array<Eigen::Matrix<double, 3, 4>, 4> face;
};
WhitneyElement whitney_element(const SimplicialComplex3& c, int tet);

struct MassSolvers;

/// Coboundaries, masses and the relative (interior) splitting of every degree.
struct GradedOperator {
    std::array<int, 4> n{};
    std::array<SpMat, 3> d;
    std::array<SpMat, 4> G;
    std::array<std::vector<int>, 4> interior; // global ids of relative DOFs
    std::array<std::vector<int>, 4> boundary; // global ids of boundary DOFs (empty for k = 3)
    std::array<std::vector<int>, 4> interior_pos; // global -> interior position or -1
    std::array<std::vector<int>, 4> boundary_pos; // global -> boundary position or -1
    std::array<SpMat, 4> G_II;

    Eigen::VectorXd restrict_interior(int k, const Eigen::VectorXd& full) const;
    Eigen::VectorXd extend_interior(int k, const Eigen::VectorXd& rel) const;
    Eigen::VectorXd restrict_boundary(int k, const Eigen::VectorXd& full) const;

    /// G_{k,II}^{-1} r.
    Eigen::VectorXd solve_interior_mass(int k, const Eigen::VectorXd& r) const;
    /// Block of a matrix between degree-`row_deg` and degree-`col_deg` DOFs,
    /// each side restricted to interior (true) or boundary (false) simplices.
    SpMat block(const SpMat& m, int row_deg, bool row_interior, int col_deg, bool col_interior) const;

    std::shared_ptr<const MassSolvers> solvers;
};

GradedOperator assemble_graded(const SimplicialComplex3& c, const MaterialField& mat);

/// Cochain coefficients (omega^0, ..., omega^3). Relative states store interior DOFs only.
struct CochainState {
    std::array<Eigen::VectorXd, 4> w;
    bool relative = false;

    static CochainState zeros(const GradedOperator& g, bool relative);
};

/// delta_k omega = G_{k-1,II}^{-1} [d_{k-1}^T G_k omega]_I, extended by zero on the boundary.
Eigen::VectorXd codifferential(const GradedOperator& g, int k, const Eigen::VectorXd& omega);

/// Restriction of a full k-cochain to boundary k-simplices (k = 0..2).
Eigen::VectorXd trace_t(const SimplicialComplex3& c, const CochainState& s, int k);

/// Stokes residual [d_{k-1}^T G_k omega]_B - G_{k-1,BI} delta_k omega on boundary (k-1)-simplices.
Eigen::VectorXd trace_n(const GradedOperator& g, const CochainState& s, int k);

} // namespace mbetti
