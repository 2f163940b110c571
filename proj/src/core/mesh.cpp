#include "mbetti/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>

#include <Eigen/LU>

#include <nlohmann/json.hpp>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

namespace {

double signed_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                     const Eigen::Vector3d& d) {
    Eigen::Matrix3d j;
    j.col(0) = b - a;
    j.col(1) = c - a;
    j.col(2) = d - a;
    return j.determinant() / 6.0;
}

// Sign of the permutation sorting three distinct values.
int sort_sign(std::array<int, 3>& v) {
    int s = 1;
    if (v[0] > v[1]) std::swap(v[0], v[1]), s = -s;
    if (v[1] > v[2]) std::swap(v[1], v[2]), s = -s;
    if (v[0] > v[1]) std::swap(v[0], v[1]), s = -s;
    return s;
}

template <class T>
std::string join(const std::vector<T>& v, std::size_t limit = 12) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size() && i < limit; ++i) os << (i ? ", " : "") << v[i];
    if (v.size() > limit) os << ", ... (" << v.size() << " total)";
    return os.str();
}

std::string tri_str(const std::array<int, 3>& t) {
    return "[" + std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]) + "]";
}

} // namespace

SimplicialComplex3 SimplicialComplex3::from_tets(std::vector<Eigen::Vector3d> vertices,
                                                 std::vector<std::array<int, 4>> tets, std::vector<int> gamma_faces,
                                                 Options opts) {
    SimplicialComplex3 c;
    c.vertices_ = std::move(vertices);
    c.tets_ = std::move(tets);
    c.gamma_ = std::move(gamma_faces);
    c.build(opts);
    return c;
}

void SimplicialComplex3::build(const Options& opts) {
    if (tets_.size() > opts.max_tets)
        throw ResourceError("complex has " + std::to_string(tets_.size()) + " tetrahedra, budget is " +
                            std::to_string(opts.max_tets));
    if (tets_.empty()) throw ValidationError("complex has no tetrahedra");
    const int nv = static_cast<int>(vertices_.size());
    std::vector<char> used(nv, 0);
    for (std::size_t t = 0; t < tets_.size(); ++t) {
        auto s = tets_[t];
        for (int v : s)
            if (v < 0 || v >= nv) throw ValidationError("tet " + std::to_string(t) + " references a missing vertex");
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw ValidationError("tet " + std::to_string(t) + " repeats a vertex");
        for (int v : s) used[v] = 1;
    }
    for (int v = 0; v < nv; ++v)
        if (!used[v]) throw ValidationError("vertex " + std::to_string(v) + " belongs to no tetrahedron");

    if (opts.orient_by_volume) {
        for (auto& t : tets_)
            if (signed_volume(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]], vertices_[t[3]]) < 0.0)
                std::swap(t[2], t[3]);
    }

    // Simplex tables in lexicographic order of sorted vertex tuples.
    std::vector<std::array<int, 2>> all_edges;
    std::vector<std::array<int, 3>> all_tris;
    for (const auto& t : tets_) {
        for (const auto& le : kTetEdges) {
            std::array<int, 2> e{t[le[0]], t[le[1]]};
            if (e[0] > e[1]) std::swap(e[0], e[1]);
            all_edges.push_back(e);
        }
        for (int i = 0; i < 4; ++i) {
            std::array<int, 3> f{};
            int n = 0;
            for (int j = 0; j < 4; ++j)
                if (j != i) f[n++] = t[j];
            sort_sign(f);
            all_tris.push_back(f);
        }
    }
    std::sort(all_edges.begin(), all_edges.end());
    all_edges.erase(std::unique(all_edges.begin(), all_edges.end()), all_edges.end());
    std::sort(all_tris.begin(), all_tris.end());
    all_tris.erase(std::unique(all_tris.begin(), all_tris.end()), all_tris.end());
    edges_ = std::move(all_edges);
    triangles_ = std::move(all_tris);

    auto edge_index = [&](int a, int b) {
        std::array<int, 2> e{std::min(a, b), std::max(a, b)};
        return static_cast<int>(std::lower_bound(edges_.begin(), edges_.end(), e) - edges_.begin());
    };
    auto tri_index = [&](const std::array<int, 3>& f) {
        return static_cast<int>(std::lower_bound(triangles_.begin(), triangles_.end(), f) - triangles_.begin());
    };

    const int nt = static_cast<int>(tets_.size());
    const int nf = static_cast<int>(triangles_.size());
    tet_edges_.resize(nt);
    tet_faces_.resize(nt);
    tet_face_signs_.resize(nt);
    std::vector<int> incidence(nf, 0), sign_sum(nf, 0);
    std::vector<std::array<int, 2>> face_tets(nf, {-1, -1});
    for (int t = 0; t < nt; ++t) {
        const auto& tv = tets_[t];
        for (int e = 0; e < 6; ++e) tet_edges_[t][e] = edge_index(tv[kTetEdges[e][0]], tv[kTetEdges[e][1]]);
        for (int i = 0; i < 4; ++i) {
            std::array<int, 3> f{};
            int n = 0;
            for (int j = 0; j < 4; ++j)
                if (j != i) f[n++] = tv[j];
            const int s = ((i % 2) ? -1 : 1) * sort_sign(f);
            const int id = tri_index(f);
            tet_faces_[t][i] = id;
            tet_face_signs_[t][i] = s;
            if (incidence[id] < 2) face_tets[id][incidence[id]] = t;
            ++incidence[id];
            sign_sum[id] += s;
        }
    }

    std::vector<int> nonmanifold, inconsistent;
    for (int f = 0; f < nf; ++f) {
        if (incidence[f] > 2) nonmanifold.push_back(f);
        else if (incidence[f] == 2 && sign_sum[f] != 0) inconsistent.push_back(f);
    }
    if (!nonmanifold.empty()) {
        std::vector<std::string> names;
        for (int f : nonmanifold) names.push_back(tri_str(triangles_[f]));
        throw ValidationError("non-manifold face incidence (more than two tetrahedra) at faces " + join(names));
    }
    if (!inconsistent.empty()) {
        std::vector<std::string> names;
        for (int f : inconsistent) names.push_back(tri_str(triangles_[f]));
        throw OrientationError("inconsistent tetrahedron orientations across faces " + join(names));
    }

    if (!opts.orient_by_volume) {
        double total = 0.0;
        for (int t = 0; t < nt; ++t) total += tet_volume(t);
        if (total < 0.0) {
            for (auto& t : tets_) std::swap(t[2], t[3]);
            build(Options{true, opts.max_tets});
            return;
        }
        std::vector<int> inverted;
        for (int t = 0; t < nt; ++t)
            if (tet_volume(t) < 0.0) inverted.push_back(t);
        if (!inverted.empty()) throw OrientationError("inverted tetrahedra " + join(inverted));
    }

    tri_edges_.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const auto& v = triangles_[f];
        tri_edges_[f] = {edge_index(v[1], v[2]), edge_index(v[0], v[2]), edge_index(v[0], v[1])};
    }

    // Connectivity through shared faces.
    {
        std::vector<std::vector<int>> adj(nt);
        for (int f = 0; f < nf; ++f)
            if (incidence[f] == 2) {
                adj[face_tets[f][0]].push_back(face_tets[f][1]);
                adj[face_tets[f][1]].push_back(face_tets[f][0]);
            }
        std::vector<char> seen(nt, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int reached = 1;
        while (!q.empty()) {
            const int t = q.front();
            q.pop();
            for (int u : adj[t])
                if (!seen[u]) seen[u] = 1, ++reached, q.push(u);
        }
        if (reached != nt)
            throw ValidationError("complex is not connected: " + std::to_string(nt - reached) +
                                  " tetrahedra unreachable from tet 0");
    }

    on_boundary_ = {std::vector<char>(vertices_.size(), 0), std::vector<char>(edges_.size(), 0),
                    std::vector<char>(nf, 0), std::vector<char>(nt, 0)};
    boundary_faces_.clear();
    for (int f = 0; f < nf; ++f) {
        if (incidence[f] != 1) continue;
        boundary_faces_.push_back(f);
        on_boundary_[2][f] = 1;
        for (int v : triangles_[f]) on_boundary_[0][v] = 1;
        for (int e : tri_edges_[f]) on_boundary_[1][e] = 1;
    }
    if (boundary_faces_.empty()) throw ValidationError("complex has an empty boundary");
    for (int k = 0; k < 3; ++k) {
        boundary_simplices_[k].clear();
        boundary_pos_[k].assign(on_boundary_[k].size(), -1);
        for (int i = 0; i < static_cast<int>(on_boundary_[k].size()); ++i)
            if (on_boundary_[k][i]) {
                boundary_pos_[k][i] = static_cast<int>(boundary_simplices_[k].size());
                boundary_simplices_[k].push_back(i);
            }
    }

    if (gamma_.empty()) gamma_ = boundary_faces_;
    std::sort(gamma_.begin(), gamma_.end());
    gamma_.erase(std::unique(gamma_.begin(), gamma_.end()), gamma_.end());
    for (int f : gamma_)
        if (f < 0 || f >= nf || !on_boundary_[2][f])
            throw ValidationError("gamma face " + std::to_string(f) + " is not a boundary face");
}

int SimplicialComplex3::count(int degree) const {
    switch (degree) {
    case 0: return static_cast<int>(vertices_.size());
    case 1: return static_cast<int>(edges_.size());
    case 2: return static_cast<int>(triangles_.size());
    case 3: return static_cast<int>(tets_.size());
    default: return 0;
    }
}

SimplicialComplex3 SimplicialComplex3::with_gamma(std::vector<int> gamma_faces) const {
    if (gamma_faces.empty()) throw ValidationError("gamma must be nonempty");
    SimplicialComplex3 c = *this;
    std::sort(gamma_faces.begin(), gamma_faces.end());
    gamma_faces.erase(std::unique(gamma_faces.begin(), gamma_faces.end()), gamma_faces.end());
    for (int f : gamma_faces)
        if (f < 0 || f >= count(2) || !on_boundary(2, f))
            throw ValidationError("gamma face " + std::to_string(f) + " is not a boundary face");
    c.gamma_ = std::move(gamma_faces);
    return c;
}

double SimplicialComplex3::tet_volume(int t) const {
    const auto& v = tets_[t];
    return signed_volume(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]], vertices_[v[3]]);
}

double SimplicialComplex3::diameter() const {
    Eigen::Vector3d lo = vertices_.front(), hi = vertices_.front();
    for (const auto& p : vertices_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

int SimplicialComplex3::euler_characteristic() const { return count(0) - count(1) + count(2) - count(3); }

int SimplicialComplex3::boundary_euler_characteristic() const {
    return static_cast<int>(boundary_simplices_[0].size()) - static_cast<int>(boundary_simplices_[1].size()) +
           static_cast<int>(boundary_simplices_[2].size());
}

BoundaryPatch SimplicialComplex3::boundary_patch() const {
    std::vector<std::array<int, 2>> bedges;
    for (int e : boundary_simplices_[1])
        bedges.push_back({boundary_pos_[0][edges_[e][0]], boundary_pos_[0][edges_[e][1]]});
    std::vector<std::array<int, 3>> btris;
    for (int f : boundary_simplices_[2]) {
        const auto& v = triangles_[f];
        btris.push_back({boundary_pos_[0][v[0]], boundary_pos_[0][v[1]], boundary_pos_[0][v[2]]});
    }
    std::vector<int> g;
    for (int f : gamma_) g.push_back(boundary_pos_[2][f]);
    return BoundaryPatch(static_cast<int>(boundary_simplices_[0].size()), std::move(bedges), std::move(btris),
                         std::move(g));
}

bool SimplicialComplex3::operator==(const SimplicialComplex3& o) const {
    if (vertices_.size() != o.vertices_.size() || tets_.size() != o.tets_.size()) return false;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        if ((vertices_[i] - o.vertices_[i]).norm() > 1e-12 * (1.0 + vertices_[i].norm())) return false;
    // Tets compared as oriented simplices: same vertex set and same orientation sign.
    auto canon = [](const std::vector<std::array<int, 4>>& ts) {
        std::vector<std::pair<std::array<int, 4>, int>> out;
        for (auto t : ts) {
            int s = 1;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j + 1 < 4 - i; ++j)
                    if (t[j] > t[j + 1]) std::swap(t[j], t[j + 1]), s = -s;
            out.emplace_back(t, s);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    return canon(tets_) == canon(o.tets_) && gamma_ == o.gamma_ && triangles_ == o.triangles_;
}

// ---------------------------------------------------------------------------
// Generators

SimplicialComplex3 build_single_tet() {
    std::vector<Eigen::Vector3d> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    return SimplicialComplex3::from_tets(std::move(v), {{0, 1, 2, 3}});
}

SimplicialComplex3 refine(const SimplicialComplex3& c) {
    std::vector<Eigen::Vector3d> verts = c.vertices();
    const int nv = c.count(0);
    std::vector<int> mid(c.count(1));
    for (int e = 0; e < c.count(1); ++e) {
        mid[e] = nv + e;
        verts.push_back(0.5 * (c.vertices()[c.edges()[e][0]] + c.vertices()[c.edges()[e][1]]));
    }
    std::vector<std::array<int, 4>> tets;
    tets.reserve(8 * c.tets().size());
    for (int t = 0; t < c.count(3); ++t) {
        const auto& v = c.tets()[t];
        const auto& te = c.tet_edges(t); // 01 02 03 12 13 23
        const int ab = mid[te[0]], ac = mid[te[1]], ad = mid[te[2]], bc = mid[te[3]], bd = mid[te[4]],
                  cd = mid[te[5]];
        tets.push_back({v[0], ab, ac, ad});
        tets.push_back({v[1], ab, bc, bd});
        tets.push_back({v[2], ac, bc, cd});
        tets.push_back({v[3], ad, bd, cd});
        tets.push_back({ac, bd, ab, bc});
        tets.push_back({ac, bd, bc, cd});
        tets.push_back({ac, bd, cd, ad});
        tets.push_back({ac, bd, ad, ab});
    }
    return SimplicialComplex3::from_tets(std::move(verts), std::move(tets));
}

SimplicialComplex3 build_ball(int refinement, std::size_t max_tets) {
    if (refinement < 0) throw std::invalid_argument("refinement must be nonnegative");
    std::size_t predicted = 1;
    for (int i = 0; i < refinement; ++i) {
        predicted *= 8;
        if (predicted > max_tets)
            throw ResourceError("ball refinement " + std::to_string(refinement) + " exceeds the simplex budget of " +
                                std::to_string(max_tets) + " tetrahedra");
    }
    SimplicialComplex3 c = build_single_tet();
    for (int i = 0; i < refinement; ++i) c = refine(c);
    return c;
}

namespace {

// Split of a triangular prism (bottom 0,1,2; top 3,4,5 above them) into three
// tetrahedra with every quad diagonal through its smallest global vertex.
std::array<std::array<int, 4>, 3> split_prism(const std::array<int, 6>& v) {
    static constexpr int rot[6][6] = {{0, 1, 2, 3, 4, 5}, {1, 2, 0, 4, 5, 3}, {2, 0, 1, 5, 3, 4},
                                      {3, 5, 4, 0, 2, 1}, {4, 3, 5, 1, 0, 2}, {5, 4, 3, 2, 1, 0}};
    const int m = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
    std::array<int, 6> p{};
    for (int i = 0; i < 6; ++i) p[i] = v[rot[m][i]];
    if (std::min(p[1], p[5]) < std::min(p[2], p[4]))
        return {{{p[0], p[1], p[2], p[5]}, {p[0], p[1], p[5], p[4]}, {p[0], p[4], p[5], p[3]}}};
    return {{{p[0], p[1], p[2], p[4]}, {p[0], p[4], p[2], p[5]}, {p[0], p[4], p[5], p[3]}}};
}

} // namespace

SimplicialComplex3 build_solid_torus(int n_segments, int refinement) {
    if (n_segments < 3) throw std::invalid_argument("solid torus needs at least 3 segments");
    const double big_r = 2.0, small_r = 1.0;
    std::vector<Eigen::Vector3d> verts;
    for (int i = 0; i < n_segments; ++i) {
        const double th = 2.0 * std::numbers::pi * i / n_segments;
        for (int j = 0; j < 3; ++j) {
            const double ph = std::numbers::pi / 2 + 2.0 * std::numbers::pi * j / 3;
            const double rr = big_r + small_r * std::cos(ph);
            verts.emplace_back(rr * std::cos(th), rr * std::sin(th), small_r * std::sin(ph));
        }
    }
    std::vector<std::array<int, 4>> tets;
    for (int i = 0; i < n_segments; ++i) {
        const int a = 3 * i, b = 3 * ((i + 1) % n_segments);
        for (const auto& t : split_prism({a, a + 1, a + 2, b, b + 1, b + 2})) tets.push_back(t);
    }
    SimplicialComplex3 c;
    try {
        c = SimplicialComplex3::from_tets(std::move(verts), std::move(tets));
    } catch (const ValidationError& e) {
        throw ConstructionError(std::string("prism splitting is inconsistent: ") + e.what());
    } catch (const OrientationError& e) {
        throw ConstructionError(std::string("prism splitting is inconsistent: ") + e.what());
    }
    for (int i = 0; i < refinement; ++i) c = refine(c);
    return c;
}

SimplicialComplex3 build_tunneled_box(int k, int resolution, TunnelKind kind) {
    if (k < 0) throw std::invalid_argument("number of tunnels must be nonnegative");
    if (resolution < 1) throw GeometryError("resolution must be at least one voxel per hole/wall");
    const int u = resolution;
    int nx, ny, nz;
    std::vector<char> solid;
    auto at = [&](int x, int y, int z) -> char& { return solid[(static_cast<std::size_t>(z) * ny + y) * nx + x]; };
    if (kind == TunnelKind::through) {
        nx = (2 * k + 1) * u, ny = 3 * u, nz = 2 * u;
        solid.assign(static_cast<std::size_t>(nx) * ny * nz, 1);
        for (int i = 0; i < k; ++i)
            for (int z = 0; z < nz; ++z)
                for (int y = u; y < 2 * u; ++y)
                    for (int x = (2 * i + 1) * u; x < (2 * i + 2) * u; ++x) at(x, y, z) = 0;
    } else {
        nx = (4 * k + 1) * u, ny = 5 * u, nz = 3 * u;
        solid.assign(static_cast<std::size_t>(nx) * ny * nz, 1);
        for (int i = 0; i < k; ++i) {
            const int x0 = (1 + 4 * i) * u;
            for (int z = u; z < 2 * u; ++z)
                for (int y = u; y < 4 * u; ++y)
                    for (int x = x0; x < x0 + 3 * u; ++x) {
                        const bool hole = x >= x0 + u && x < x0 + 2 * u && y >= 2 * u && y < 3 * u;
                        if (!hole) at(x, y, z) = 0;
                    }
        }
    }

    // Grid vertices used by solid voxels.
    const int gx = nx + 1, gy = ny + 1, gz = nz + 1;
    std::vector<int> vid(static_cast<std::size_t>(gx) * gy * gz, -1);
    std::vector<Eigen::Vector3d> verts;
    auto vertex = [&](int x, int y, int z) {
        int& id = vid[(static_cast<std::size_t>(z) * gy + y) * gx + x];
        if (id < 0) {
            id = static_cast<int>(verts.size());
            verts.emplace_back(x, y, z);
        }
        return id;
    };
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    std::vector<std::array<int, 4>> tets;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                if (!at(x, y, z)) continue;
                for (const auto& p : perms) {
                    std::array<int, 3> c{x, y, z};
                    std::array<int, 4> t{};
                    t[0] = vertex(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[p[s]];
                        t[s + 1] = vertex(c[0], c[1], c[2]);
                    }
                    tets.push_back(t);
                }
            }
    return SimplicialComplex3::from_tets(std::move(verts), std::move(tets));
}

// ---------------------------------------------------------------------------

SimplicialComplex3 select_gamma(const SimplicialComplex3& c, const GammaSelector& sel) {
    const auto& bf = c.boundary_faces();
    if (bf.empty()) throw ValidationError("cannot select gamma on an empty boundary");
    if (sel.whole) return c.with_gamma(bf);
    if (!(sel.fraction > 0.0 && sel.fraction <= 1.0)) throw std::invalid_argument("gamma fraction must lie in (0,1]");
    if (sel.seed_face < 0 || sel.seed_face >= static_cast<int>(bf.size()))
        throw std::invalid_argument("gamma seed face out of range");
    const auto target = static_cast<std::size_t>(std::ceil(sel.fraction * static_cast<double>(bf.size()) - 1e-12));

    // Boundary faces adjacent through boundary edges.
    std::map<int, std::vector<int>> by_edge;
    for (std::size_t i = 0; i < bf.size(); ++i)
        for (int e : c.triangle_edges(bf[i])) by_edge[e].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> adj(bf.size());
    for (const auto& [e, fs] : by_edge)
        for (int a : fs)
            for (int b : fs)
                if (a != b) adj[a].push_back(b);
    for (auto& a : adj) std::sort(a.begin(), a.end());

    std::vector<char> seen(bf.size(), 0);
    std::vector<int> chosen;
    std::queue<int> q;
    q.push(sel.seed_face);
    seen[sel.seed_face] = 1;
    while (!q.empty() && chosen.size() < target) {
        const int i = q.front();
        q.pop();
        chosen.push_back(bf[i]);
        for (int j : adj[i])
            if (!seen[j]) seen[j] = 1, q.push(j);
    }
    return c.with_gamma(std::move(chosen));
}

SimplicialComplex3 load_complex(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open mesh file " + path.string());
    nlohmann::json j;
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::array<int, 4>> tets;
    std::vector<std::array<int, 3>> gamma_tris;
    try {
        j = nlohmann::json::parse(in);
        for (const auto& p : j.at("vertices")) {
            const auto a = p.get<std::array<double, 3>>();
            verts.emplace_back(a[0], a[1], a[2]);
        }
        tets = j.at("tets").get<std::vector<std::array<int, 4>>>();
        if (j.contains("gamma_faces")) gamma_tris = j.at("gamma_faces").get<std::vector<std::array<int, 3>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed mesh file " + path.string() + ": " + e.what());
    }
    SimplicialComplex3 c = SimplicialComplex3::from_tets(std::move(verts), std::move(tets), {},
                                                         SimplicialComplex3::Options{false});
    if (gamma_tris.empty()) return c;
    std::vector<int> g;
    for (auto t : gamma_tris) {
        std::sort(t.begin(), t.end());
        auto it = std::lower_bound(c.triangles().begin(), c.triangles().end(), t);
        if (it == c.triangles().end() || *it != t)
            throw ValidationError("gamma face " + tri_str(t) + " is not a face of the mesh");
        g.push_back(static_cast<int>(it - c.triangles().begin()));
    }
    return c.with_gamma(std::move(g));
}

void save_complex(const SimplicialComplex3& c, const std::filesystem::path& path) {
    nlohmann::json j;
    auto& vs = j["vertices"] = nlohmann::json::array();
    for (const auto& p : c.vertices()) vs.push_back({p.x(), p.y(), p.z()});
    j["tets"] = c.tets();
    auto& g = j["gamma_faces"] = nlohmann::json::array();
    for (int f : c.gamma()) g.push_back(c.triangles()[f]);
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write mesh file " + path.string());
    out << j.dump() << "\n";
}

} // namespace mbetti
