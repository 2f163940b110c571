#pragma once

#include <array>
#include <vector>

#include "mbetti/mesh.hpp"

namespace mbetti {

enum class HomologyMode { absolute, relative };

/// Simplicial chain complex with integer incidence entries. In relative mode
/// boundary simplices are quotiented out (rows and columns deleted).
struct ChainComplexQ {
    HomologyMode mode = HomologyMode::absolute;
    std::array<int, 4> dims{};
    /// boundary[k] maps k-chains to (k-1)-chains, k = 1..3; stored by column.
    std::array<std::vector<std::vector<std::pair<int, int>>>, 4> boundary;

    static ChainComplexQ from_complex(const SimplicialComplex3& c, HomologyMode mode);
};

/// Rank over Q of a sparse integer matrix given by columns.
int rank_q(const std::vector<std::vector<std::pair<int, int>>>& columns);

/// Betti numbers over Q by exact rational elimination.
std::array<int, 4> betti(const SimplicialComplex3& c, HomologyMode mode);
std::array<int, 4> betti(const ChainComplexQ& cc);

/// Exact check that every composite boundary vanishes.
bool boundary_squares_to_zero(const ChainComplexQ& cc);

int euler(const SimplicialComplex3& c);
int boundary_euler(const SimplicialComplex3& c);

} // namespace mbetti
