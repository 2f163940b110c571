#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mbetti/boundary/patch.hpp"

namespace mbetti {

/// Oriented tetrahedral complex with boundary and a measurement patch Gamma.
///
/// Global orientations: edges run from the lower to the higher vertex index,
/// triangles follow sorted vertex order, tetrahedra are stored with positive
/// volume. Immutable once constructed.
class SimplicialComplex3 {
public:
    struct Options {
        /// Reorder each tet to positive volume (generators). When false the
        /// given orientation is checked for combinatorial consistency (loaders).
        bool orient_by_volume = true;
        std::size_t max_tets = 2'000'000;
    };

    SimplicialComplex3() = default;
    static SimplicialComplex3 from_tets(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 4>> tets,
                                        std::vector<int> gamma_faces, Options opts);
    static SimplicialComplex3 from_tets(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 4>> tets) {
        return from_tets(std::move(vertices), std::move(tets), {}, Options{});
    }

    int count(int degree) const;
    const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 4>>& tets() const { return tets_; }
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

    /// Local edge e of tet t joins local vertices kTetEdges[e].
    static constexpr std::array<std::array<int, 2>, 6> kTetEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    const std::array<int, 6>& tet_edges(int t) const { return tet_edges_[t]; }
    /// Face i of tet t is opposite local vertex i.
    const std::array<int, 4>& tet_faces(int t) const { return tet_faces_[t]; }
    /// Incidence sign of face i in the boundary of tet t.
    const std::array<int, 4>& tet_face_signs(int t) const { return tet_face_signs_[t]; }
    /// Edges of a triangle (b,c), (a,c), (a,b) with boundary signs +1, -1, +1.
    const std::array<int, 3>& triangle_edges(int f) const { return tri_edges_[f]; }

    bool on_boundary(int degree, int i) const { return on_boundary_[degree][i] != 0; }
    const std::vector<int>& boundary_faces() const { return boundary_faces_; }
    /// Boundary simplices of degree 0..2 in increasing global index.
    const std::vector<int>& boundary_simplices(int degree) const { return boundary_simplices_[degree]; }
    /// Position inside boundary_simplices(degree), or -1 for interior simplices.
    int boundary_position(int degree, int i) const { return boundary_pos_[degree][i]; }

    const std::vector<int>& gamma() const { return gamma_; }
    SimplicialComplex3 with_gamma(std::vector<int> gamma_faces) const;

    double tet_volume(int t) const;
    double diameter() const;
    int euler_characteristic() const;
    int boundary_euler_characteristic() const;

    /// The boundary surface with Gamma in boundary-local numbering.
    BoundaryPatch boundary_patch() const;

    bool operator==(const SimplicialComplex3& o) const;

private:
    void build(const Options& opts);

    std::vector<Eigen::Vector3d> vertices_;
    std::vector<std::array<int, 4>> tets_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<std::array<int, 6>> tet_edges_;
    std::vector<std::array<int, 4>> tet_faces_;
    std::vector<std::array<int, 4>> tet_face_signs_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::array<std::vector<char>, 4> on_boundary_;
    std::array<std::vector<int>, 3> boundary_simplices_;
    std::array<std::vector<int>, 3> boundary_pos_;
    std::vector<int> boundary_faces_;
    std::vector<int> gamma_;
};

SimplicialComplex3 build_single_tet();
/// Uniform 1:8 subdivision applied `refinement` times to the single tet.
SimplicialComplex3 build_ball(int refinement, std::size_t max_tets = 2'000'000);
/// Ring of n triangular prisms (3 tets each), then `refinement` 1:8 subdivisions.
SimplicialComplex3 build_solid_torus(int n_segments, int refinement = 0);

enum class TunnelKind {
    through,  ///< k disjoint vertical holes: genus-k handlebody, Betti (1,k,0,0)
    enclosed, ///< k disjoint rectangular loop cavities: Betti (1,k,k,0)
};
/// Kuhn-triangulated voxel box with k tunnels; `resolution` is the voxel width of holes and walls.
SimplicialComplex3 build_tunneled_box(int k, int resolution, TunnelKind kind = TunnelKind::through);

/// Uniform 1:8 subdivision of every tetrahedron.
SimplicialComplex3 refine(const SimplicialComplex3& c);

struct GammaSelector {
    bool whole = true;
    double fraction = 1.0;
    int seed_face = 0; ///< index into boundary_faces()

    static GammaSelector all() { return {}; }
    static GammaSelector patch(double p, int seed = 0) { return {false, p, seed}; }
};
SimplicialComplex3 select_gamma(const SimplicialComplex3& c, const GammaSelector& sel);

SimplicialComplex3 load_complex(const std::filesystem::path& path);
void save_complex(const SimplicialComplex3& c, const std::filesystem::path& path);

} // namespace mbetti
