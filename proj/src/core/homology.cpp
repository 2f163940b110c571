#include "mbetti/homology.hpp"

#include <map>

#include <gmpxx.h>

namespace mbetti {

ChainComplexQ ChainComplexQ::from_complex(const SimplicialComplex3& c, HomologyMode mode) {
    ChainComplexQ cc;
    cc.mode = mode;
    std::array<std::vector<int>, 4> index;
    for (int k = 0; k < 4; ++k) {
        index[k].assign(c.count(k), -1);
        int n = 0;
        for (int i = 0; i < c.count(k); ++i)
            if (mode == HomologyMode::absolute || k == 3 || !c.on_boundary(k, i)) index[k][i] = n++;
        cc.dims[k] = n;
    }
    auto push = [&](int k, int col, int row, int sign) {
        if (index[k][col] < 0 || index[k - 1][row] < 0) return;
        cc.boundary[k][index[k][col]].emplace_back(index[k - 1][row], sign);
    };
    for (int k = 1; k < 4; ++k) cc.boundary[k].assign(cc.dims[k], {});
    for (int e = 0; e < c.count(1); ++e) {
        push(1, e, c.edges()[e][0], -1);
        push(1, e, c.edges()[e][1], 1);
    }
    for (int f = 0; f < c.count(2); ++f) {
        const auto& te = c.triangle_edges(f);
        push(2, f, te[0], 1);
        push(2, f, te[1], -1);
        push(2, f, te[2], 1);
    }
    for (int t = 0; t < c.count(3); ++t)
        for (int i = 0; i < 4; ++i) push(3, t, c.tet_faces(t)[i], c.tet_face_signs(t)[i]);
    return cc;
}

int rank_q(const std::vector<std::vector<std::pair<int, int>>>& columns) {
    // Column reduction by lowest nonzero row; pivot_of[row] is a reduced column.
    using Column = std::map<int, mpq_class>;
    std::map<int, Column> pivot_of;
    int rank = 0;
    for (const auto& src : columns) {
        Column col;
        for (const auto& [r, v] : src) col[r] += v;
        for (auto it = col.begin(); it != col.end();) it = it->second == 0 ? col.erase(it) : std::next(it);
        while (!col.empty()) {
            const int low = col.rbegin()->first;
            auto p = pivot_of.find(low);
            if (p == pivot_of.end()) break;
            const mpq_class factor = col.rbegin()->second / p->second.rbegin()->second;
            for (const auto& [r, v] : p->second) {
                mpq_class& x = col[r];
                x -= factor * v;
                if (x == 0) col.erase(r);
            }
        }
        if (!col.empty()) {
            pivot_of.emplace(col.rbegin()->first, std::move(col));
            ++rank;
        }
    }
    return rank;
}

std::array<int, 4> betti(const ChainComplexQ& cc) {
    std::array<int, 5> rank{};
    for (int k = 1; k < 4; ++k) rank[k] = rank_q(cc.boundary[k]);
    std::array<int, 4> b{};
    for (int k = 0; k < 4; ++k) b[k] = cc.dims[k] - rank[k] - rank[k + 1];
    return b;
}

std::array<int, 4> betti(const SimplicialComplex3& c, HomologyMode mode) {
    return betti(ChainComplexQ::from_complex(c, mode));
}

bool boundary_squares_to_zero(const ChainComplexQ& cc) {
    for (int k = 2; k < 4; ++k)
        for (const auto& col : cc.boundary[k]) {
            std::map<int, long> acc;
            for (const auto& [r, v] : col)
                for (const auto& [r2, v2] : cc.boundary[k - 1][r]) acc[r2] += static_cast<long>(v) * v2;
            for (const auto& [r, v] : acc)
                if (v != 0) return false;
        }
    return true;
}

int euler(const SimplicialComplex3& c) { return c.euler_characteristic(); }
int boundary_euler(const SimplicialComplex3& c) { return c.boundary_euler_characteristic(); }

} // namespace mbetti
