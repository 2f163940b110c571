#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "mbetti/boundary/errors.hpp"
#include "mbetti/homology.hpp"
#include "mbetti/mesh.hpp"

using namespace mbetti;
using Betti = std::array<int, 4>;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "mbetti_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void check_incidence(const SimplicialComplex3& c) {
    std::vector<int> inc(c.count(2), 0);
    for (int t = 0; t < c.count(3); ++t)
        for (int f : c.tet_faces(t)) ++inc[f];
    std::set<int> bf(c.boundary_faces().begin(), c.boundary_faces().end());
    for (int f = 0; f < c.count(2); ++f) CHECK(inc[f] == (bf.count(f) ? 1 : 2));
    for (int t = 0; t < c.count(3); ++t) CHECK(c.tet_volume(t) > 0.0);
}

Betti reversed(const Betti& b) { return {b[3], b[2], b[1], b[0]}; }

} // namespace

TEST_CASE("single tet") {
    auto c = build_single_tet();
    CHECK(c.count(0) == 4);
    CHECK(c.count(1) == 6);
    CHECK(c.count(2) == 4);
    CHECK(c.count(3) == 1);
    CHECK(c.boundary_faces().size() == 4);
    CHECK(betti(c, HomologyMode::absolute) == Betti{1, 0, 0, 0});
    CHECK(euler(c) == 1);
    CHECK(boundary_euler(c) == 2);
    CHECK(c.gamma().size() == 4);
    check_incidence(c);
}

TEST_CASE("ball refinement") {
    auto b0 = build_ball(0);
    CHECK(b0 == build_single_tet());
    auto b1 = build_ball(1);
    CHECK(b1.count(3) == 8);
    CHECK(build_ball(2).count(3) == 64);
    CHECK(euler(b1) == 1);
    CHECK(betti(b1, HomologyMode::absolute) == Betti{1, 0, 0, 0});
    CHECK(betti(build_ball(2), HomologyMode::relative) == Betti{0, 0, 0, 1});
    check_incidence(b1);
    CHECK_THROWS_AS(build_ball(9, 1000), ResourceError);
}

TEST_CASE("solid torus") {
    auto c3 = build_solid_torus(3);
    CHECK(c3.count(0) == 9);
    CHECK(c3.count(3) == 9);
    CHECK(euler(c3) == 0);
    for (int n : {3, 4, 5, 8}) {
        auto c = build_solid_torus(n);
        CAPTURE(n);
        CHECK(betti(c, HomologyMode::absolute) == Betti{1, 1, 0, 0});
        CHECK(betti(c, HomologyMode::relative) == Betti{0, 0, 1, 1});
        CHECK(boundary_euler(c) == 0);
        check_incidence(c);
    }
    auto r = build_solid_torus(4, 1);
    CHECK(betti(r, HomologyMode::absolute) == Betti{1, 1, 0, 0});
    CHECK_THROWS(build_solid_torus(2));
}

TEST_CASE("tunneled box") {
    for (int k = 0; k <= 3; ++k)
        for (int r = 1; r <= 2; ++r) {
            if (r == 2 && k > 1) continue;
            CAPTURE(k);
            CAPTURE(r);
            auto c = build_tunneled_box(k, r);
            const Betti abs = betti(c, HomologyMode::absolute);
            CHECK(abs == Betti{1, k, 0, 0});
            CHECK(betti(c, HomologyMode::relative) == reversed(abs));
            CHECK(boundary_euler(c) == 2 * euler(c));
            check_incidence(c);
        }
    auto e = build_tunneled_box(1, 1, TunnelKind::enclosed);
    CHECK(betti(e, HomologyMode::absolute) == Betti{1, 1, 1, 0});
    CHECK(betti(e, HomologyMode::relative) == Betti{0, 1, 1, 1});
    CHECK_THROWS_AS(build_tunneled_box(1, 0), GeometryError);
}

TEST_CASE("subdivision preserves Betti numbers") {
    for (const auto& c : {build_solid_torus(3), build_tunneled_box(1, 1)}) {
        auto r = refine(c);
        CHECK(r.count(3) == 8 * c.count(3));
        CHECK(betti(r, HomologyMode::absolute) == betti(c, HomologyMode::absolute));
        CHECK(betti(r, HomologyMode::relative) == betti(c, HomologyMode::relative));
    }
}

TEST_CASE("boundary operators square to zero") {
    for (auto mode : {HomologyMode::absolute, HomologyMode::relative})
        CHECK(boundary_squares_to_zero(ChainComplexQ::from_complex(build_tunneled_box(2, 1), mode)));
}

TEST_CASE("betti independent of vertex numbering") {
    auto c = build_solid_torus(5);
    std::vector<int> perm(c.count(0));
    for (int i = 0; i < c.count(0); ++i) perm[i] = (7 * i + 3) % c.count(0);
    std::vector<Eigen::Vector3d> v(c.count(0));
    for (int i = 0; i < c.count(0); ++i) v[perm[i]] = c.vertices()[i];
    auto tets = c.tets();
    for (auto& t : tets)
        for (int& x : t) x = perm[x];
    auto p = SimplicialComplex3::from_tets(v, tets);
    CHECK(betti(p, HomologyMode::absolute) == Betti{1, 1, 0, 0});
    CHECK(betti(p, HomologyMode::relative) == Betti{0, 0, 1, 1});
}

TEST_CASE("gamma selection") {
    auto b = build_ball(1);
    CHECK(select_gamma(b, GammaSelector::all()).gamma().size() == b.boundary_faces().size());
    CHECK(select_gamma(build_single_tet(), GammaSelector::patch(0.25)).gamma().size() == 1);

    auto t = build_solid_torus(3);
    auto g = select_gamma(t, GammaSelector::patch(0.25));
    const auto need = static_cast<std::size_t>(std::ceil(0.25 * t.boundary_faces().size()));
    CHECK(g.gamma().size() >= need);
    // Connected through shared edges.
    std::vector<int> faces = g.gamma();
    std::set<int> reached{faces[0]};
    bool grew = true;
    while (grew) {
        grew = false;
        for (int f : faces) {
            if (reached.count(f)) continue;
            for (int r : reached) {
                int shared = 0;
                for (int e : g.triangle_edges(f))
                    for (int e2 : g.triangle_edges(r)) shared += e == e2;
                if (shared) {
                    reached.insert(f);
                    grew = true;
                    break;
                }
            }
        }
    }
    CHECK(reached.size() == faces.size());

    auto patch = g.boundary_patch();
    CHECK(patch.count(2) == static_cast<int>(t.boundary_faces().size()));
    CHECK(patch.euler_characteristic() == 0);
}

TEST_CASE("save and load round trip") {
    auto path = temp_file("tet.json");
    auto c = build_solid_torus(4);
    c = select_gamma(c, GammaSelector::patch(0.3));
    save_complex(c, path);
    auto d = load_complex(path);
    CHECK(d == c);
    CHECK(d.gamma() == c.gamma());
}

TEST_CASE("load rejects invalid meshes") {
    auto write = [](const std::string& name, const std::string& body) {
        auto p = temp_file(name);
        std::ofstream(p) << body;
        return p;
    };
    const std::string pts = R"("vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1],[1,1,1],[-1,-1,1]])";
    auto nm = write("nm.json", "{" + pts + R"(, "tets": [[0,1,2,3],[1,0,2,4],[0,1,2,5]]})");
    CHECK_THROWS_AS(load_complex(nm), ValidationError);
    try {
        load_complex(nm);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("[0,1,2]") != std::string::npos);
    }
    auto bad = write("orient.json",
                     R"({"vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1],[0,0,-1]], "tets": [[0,1,2,3],[0,1,2,4]]})");
    try {
        load_complex(bad);
        FAIL("expected orientation error");
    } catch (const OrientationError& e) {
        CHECK(std::string(e.what()).find("[0,1,2]") != std::string::npos);
    }
    CHECK_THROWS_AS(load_complex(write("junk.json", "{\"vertices\": 3}")), ValidationError);
}
