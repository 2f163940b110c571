#include "mbetti/boundary/patch.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

BoundaryPatch::BoundaryPatch(int n_vertices, std::vector<std::array<int, 2>> edges,
                             std::vector<std::array<int, 3>> triangles,
                             std::vector<int> gamma_triangles)
    : n_vertices_(n_vertices), edges_(std::move(edges)), triangles_(std::move(triangles)),
      gamma_(std::move(gamma_triangles)) {
    build();
}

int BoundaryPatch::count(int degree) const {
    switch (degree) {
    case 0: return n_vertices_;
    case 1: return static_cast<int>(edges_.size());
    case 2: return static_cast<int>(triangles_.size());
    default: return 0;
    }
}

int BoundaryPatch::euler_characteristic() const {
    return n_vertices_ - static_cast<int>(edges_.size()) + static_cast<int>(triangles_.size());
}

void BoundaryPatch::build() {
    std::sort(gamma_.begin(), gamma_.end());
    gamma_.erase(std::unique(gamma_.begin(), gamma_.end()), gamma_.end());

    const int ne = count(1);
    const int nt = count(2);
    std::map<std::array<int, 2>, int> edge_id;
    for (int e = 0; e < ne; ++e) {
        const auto& ed = edges_[e];
        if (ed[0] >= ed[1] || ed[0] < 0 || ed[1] >= n_vertices_)
            throw ValidationError("boundary edge " + std::to_string(e) + " is not a sorted vertex pair");
        edge_id[ed] = e;
    }

    std::vector<Eigen::Triplet<double>> t0;
    for (int e = 0; e < ne; ++e) {
        t0.emplace_back(e, edges_[e][0], -1.0);
        t0.emplace_back(e, edges_[e][1], 1.0);
    }
    d_[0].resize(ne, n_vertices_);
    d_[0].setFromTriplets(t0.begin(), t0.end());

    std::vector<std::array<int, 3>> tri_edges(nt);
    std::vector<Eigen::Triplet<double>> t1;
    for (int f = 0; f < nt; ++f) {
        const auto& t = triangles_[f];
        const std::array<std::array<int, 2>, 3> es{{{t[1], t[2]}, {t[0], t[2]}, {t[0], t[1]}}};
        const double sign[3] = {1.0, -1.0, 1.0};
        for (int i = 0; i < 3; ++i) {
            auto it = edge_id.find(es[i]);
            if (it == edge_id.end())
                throw ValidationError("boundary triangle " + std::to_string(f) + " references a missing edge");
            tri_edges[f][i] = it->second;
            t1.emplace_back(f, it->second, sign[i]);
        }
    }
    d_[1].resize(nt, ne);
    d_[1].setFromTriplets(t1.begin(), t1.end());

    std::vector<char> in_gamma(nt, 0);
    for (int f : gamma_) {
        if (f < 0 || f >= nt) throw ValidationError("gamma triangle " + std::to_string(f) + " out of range");
        in_gamma[f] = 1;
    }

    // Closure of Gamma, and "inner" simplices whose boundary cofaces are all in Gamma.
    std::array<std::vector<char>, 3> closure{std::vector<char>(n_vertices_, 0), std::vector<char>(ne, 0),
                                             std::vector<char>(nt, 0)};
    std::vector<int> v_total(n_vertices_, 0), v_gamma(n_vertices_, 0);
    std::vector<int> e_total(ne, 0), e_gamma(ne, 0);
    for (int f = 0; f < nt; ++f) {
        for (int v : triangles_[f]) {
            ++v_total[v];
            if (in_gamma[f]) ++v_gamma[v];
        }
        for (int e : tri_edges[f]) {
            ++e_total[e];
            if (in_gamma[f]) ++e_gamma[e];
        }
        if (in_gamma[f]) {
            closure[2][f] = 1;
            for (int v : triangles_[f]) closure[0][v] = 1;
            for (int e : tri_edges[f]) closure[1][e] = 1;
        }
    }

    inner_mask_[0].assign(n_vertices_, 0);
    inner_mask_[1].assign(ne, 0);
    inner_mask_[2] = in_gamma;
    for (int v = 0; v < n_vertices_; ++v) inner_mask_[0][v] = v_total[v] > 0 && v_total[v] == v_gamma[v];
    for (int e = 0; e < ne; ++e) inner_mask_[1][e] = e_total[e] > 0 && e_total[e] == e_gamma[e];

    for (int k = 0; k < 3; ++k) {
        support_[k].clear();
        inner_[k].clear();
        support_pos_[k].assign(count(k), -1);
        for (int i = 0; i < count(k); ++i) {
            if (closure[k][i]) {
                support_pos_[k][i] = static_cast<int>(support_[k].size());
                support_[k].push_back(i);
            }
            if (inner_mask_[k][i]) inner_[k].push_back(i);
        }
    }
}

nlohmann::json BoundaryPatch::to_json() const {
    return nlohmann::json{{"n_vertices", n_vertices_},
                          {"edges", edges_},
                          {"triangles", triangles_},
                          {"gamma_triangles", gamma_}};
}

BoundaryPatch BoundaryPatch::from_json(const nlohmann::json& j) {
    try {
        return BoundaryPatch(j.at("n_vertices").get<int>(), j.at("edges").get<std::vector<std::array<int, 2>>>(),
                             j.at("triangles").get<std::vector<std::array<int, 3>>>(),
                             j.at("gamma_triangles").get<std::vector<int>>());
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("malformed boundary patch: ") + e.what());
    }
}

} // namespace mbetti
