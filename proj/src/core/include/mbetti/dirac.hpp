#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "mbetti/forms.hpp"

namespace mbetti {

/// Graded Dirac operator on relative cochains: (D w)^k = d w^{k-1} - delta w^{k+1}.
///
/// Stored as the skew-symmetric Galerkin matrix K = G D on the concatenated
/// interior DOFs of degrees 0..3, together with the block mass G.
struct DiracSystem {
    GradedOperator ops;
    std::array<int, 5> offset{}; ///< start of degree k inside a packed relative vector
    SpMat G;
    SpMat K;
    /// Skew matrix on all DOFs (interior and boundary) with the same blocks as K.
    SpMat A_full;
    std::array<int, 5> full_offset{};

    int size() const { return offset[4]; }
    Eigen::VectorXd pack(const CochainState& s) const;
    CochainState unpack(const Eigen::VectorXd& x) const;
    /// D x for a packed relative vector.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    CochainState apply(const CochainState& s) const;
};

DiracSystem assemble_dirac(const SimplicialComplex3& c, const MaterialField& mat);

struct EigenLadder {
    std::array<Eigen::VectorXd, 4> values; ///< ascending eigenvalues of -D^2 per degree
    std::array<int, 4> kernel_dims{};
    double threshold = 0.0;
    double gap_ratio = 0.0; ///< smallest ratio between first kept and last discarded eigenvalue

    void write_csv(const std::filesystem::path& path) const;
};

struct HarmonicKernel {
    std::array<int, 4> dims{};
    std::vector<CochainState> basis; ///< G-orthonormal relative states, one degree each
    EigenLadder ladder;

    int total() const { return dims[0] + dims[1] + dims[2] + dims[3]; }
};

/// Dense generalized eigensolve of the degree blocks of -D^2 against G.
/// Eigenvalues below tol * (largest eigenvalue) are kernel; a gap ratio
/// below `min_gap_ratio` throws AmbiguousRankError with the ladder.
HarmonicKernel harmonic_kernel(const DiracSystem& sys, double tol = 1e-8, double min_gap_ratio = 10.0);

/// Smallest nonzero |eigenvalue| of D in the G inner product; +inf if D vanishes.
double spectral_gap(const DiracSystem& sys);

/// Kernel dimensions of the degree blocks of D^2; throws ConsistencyError
/// unless they equal the relative Betti numbers of the homology oracle.
std::array<int, 4> hodge_kernel_check(const SimplicialComplex3& c, const MaterialField& mat);

} // namespace mbetti
