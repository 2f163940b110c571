#pragma once

#include <array>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

namespace mbetti {

/// The boundary surface of a mesh as seen from the outside: its own vertex,
/// edge and triangle tables (local numbering), the boundary coboundaries and
/// the measurement patch Gamma. Carries no interior information.
///
/// Local vertex ids increase with the owning mesh's global ids, so sorted
/// local tuples carry the same orientation as the volume mesh simplices.
class BoundaryPatch {
public:
    BoundaryPatch() = default;
    BoundaryPatch(int n_vertices, std::vector<std::array<int, 2>> edges,
                  std::vector<std::array<int, 3>> triangles, std::vector<int> gamma_triangles);

    int count(int degree) const;
    int n_vertices() const { return n_vertices_; }
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<int>& gamma_triangles() const { return gamma_; }

    /// Boundary coboundary d_k : C^k(dM) -> C^{k+1}(dM), k = 0, 1.
    const Eigen::SparseMatrix<double>& coboundary(int k) const { return d_.at(k); }

    /// Simplices of degree k in the closure of Gamma; records are indexed by these.
    const std::vector<int>& support(int degree) const { return support_.at(degree); }
    /// Position of boundary simplex i inside support(degree), or -1.
    int support_position(int degree, int i) const { return support_pos_.at(degree)[i]; }

    /// Simplices whose incident boundary triangles all lie in Gamma.
    const std::vector<int>& inner(int degree) const { return inner_.at(degree); }
    bool is_inner(int degree, int i) const { return inner_mask_.at(degree)[i] != 0; }

    /// V - E + F of the whole boundary surface.
    int euler_characteristic() const;

    nlohmann::json to_json() const;
    static BoundaryPatch from_json(const nlohmann::json& j);

private:
    void build();

    int n_vertices_ = 0;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<int> gamma_;

    std::array<Eigen::SparseMatrix<double>, 2> d_;
    std::array<std::vector<int>, 3> support_;
    std::array<std::vector<int>, 3> support_pos_;
    std::array<std::vector<int>, 3> inner_;
    std::array<std::vector<char>, 3> inner_mask_;
};

} // namespace mbetti
