#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>

#include "mbetti/boundary/errors.hpp"
#include "mbetti/forward.hpp"
#include "mbetti/inverse/blagov.hpp"

using namespace mbetti;

namespace {

// Dataset plus interior states, for oracle comparisons only.
struct Oracle {
    SimplicialComplex3 c;
    DiracSystem sys;
    std::shared_ptr<ResponseDataset> ds;
    std::vector<std::vector<CochainState>> states;

    double inner(int f, int h, int k, int jt, int js) const {
        return states[f][jt].w[k].dot(sys.ops.G[k] * states[h][js].w[k]);
    }
};

Oracle simulate(SimplicialComplex3 c, std::uint64_t mat_seed, const SourceSpec& spec, int n_sources,
                bool physical = false) {
    Oracle o;
    auto mat = MaterialField::random(c.count(3), 5.0, mat_seed);
    o.sys = assemble_dirac(c, mat);
    ForwardSolver solver(c, o.sys, spec.dt);
    o.ds = std::make_shared<ResponseDataset>();
    o.ds->patch = solver.patch();
    o.ds->grid = spec.grid();
    o.ds->tau = spec.tau;
    o.ds->method = physical ? "physical-maxwell" : "complete-dirac";
    SourceSpec sspec = spec;
    if (physical) sspec.degrees = {false, true, false};
    for (int j = 0; j < n_sources; ++j) {
        auto f = make_source(solver.patch(), 100 + j, sspec);
        if (physical) f = physical_source(solver.patch(), f);
        auto tr = solver.evolve(f, {false, !physical, true, !physical}, true);
        o.ds->entries.push_back({f, tr.record});
        o.states.push_back(std::move(tr.states));
    }
    o.c = std::move(c);
    return o;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("wave_solve: zero forcing and manufactured solution") {
    const double tau = 1.0;
    auto solve = [&](int per_unit) {
        const double h = 1.0 / per_unit;
        SeparableRhs rhs;
        rhs.grid = TimeGrid{-tau, h, static_cast<int>(std::lround(6.0 / h)) + 1};
        const int n = rhs.grid.size;
        SeparableRhs::Term a, b;
        for (auto* t : {&a, &b}) t->t_part.resize(n), t->s_part.resize(n);
        // I = g(s) g(t), g(x) = (1 - cos(x + tau))^2, vanishes to fourth order at -tau.
        // F(j, n) is sampled at the diamond centre (j + 1, n + 1).
        for (int j = 0; j < n; ++j) {
            const double x = rhs.grid.time(j + 1) + tau;
            const double g = std::pow(1 - std::cos(x), 2);
            const double g2 = 2 * std::pow(std::sin(x), 2) + 2 * (1 - std::cos(x)) * std::cos(x);
            a.s_part[j] = g2;
            a.t_part[j] = g;
            b.s_part[j] = g;
            b.t_part[j] = -g2;
        }
        rhs.terms = {a, b};
        const auto g = wave_solve(rhs, 2.0);
        double e = 0.0, ds = 0.0;
        for (int j = 0; j < g.values.rows(); ++j)
            for (int i = 0; i < g.values.cols(); ++i) {
                const double s = g.axis.time(j) + tau, t = g.axis.time(i) + tau;
                e = std::max(e, std::abs(g.values(j, i) - std::pow((1 - std::cos(s)) * (1 - std::cos(t)), 2)));
            }
        // The Neumann side condition holds without being imposed.
        for (int i = 0; i < g.values.cols(); ++i) ds = std::max(ds, std::abs(g.values(1, i) - g.values(0, i)) / h);
        return std::pair{e, ds};
    };
    const auto [e1, n1] = solve(16);
    const auto [e2, n2] = solve(32);
    const auto [e3, n3] = solve(64);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(std::log2(e2 / e3) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(n3 < 1e-6);

    SeparableRhs zero;
    zero.grid = TimeGrid{-tau, 0.1, 61};
    CHECK(max_abs(wave_solve(zero, 2.0).values) == 0.0);
    CHECK_THROWS_AS(wave_solve(zero, 2.5), DomainOfDependenceError);
    CHECK_THROWS_AS(wave_solve_rows(zero, 4.5), DomainOfDependenceError);
    CHECK_NOTHROW(wave_solve_rows(zero, rows_horizon(zero.grid)));
}

TEST_CASE("assembled F satisfies the lattice identity exactly") {
    auto o = simulate(select_gamma(build_solid_torus(4, 1), GammaSelector::patch(0.5)), 3, SourceSpec{2.0, 1.0 / 32, 1.0},
                      2);
    const auto& g = o.ds->grid;
    for (int k = 0; k < 4; ++k) {
        CAPTURE(k);
        const auto rhs = assemble_rhs(*o.ds, 0, 1, k);
        auto I = [&](int js, int jt) { return o.inner(0, 1, k, jt, js); };
        double e = 0.0, scale = 0.0;
        for (int js = 0; js + 2 < g.size; js += 3)
            for (int jt = 0; jt + 2 < g.size; jt += 5) {
                const double lattice = (I(js + 2, jt + 1) - I(js + 1, jt) - I(js + 1, jt + 2) + I(js, jt + 1)) / (g.step * g.step);
                e = std::max(e, std::abs(rhs.at(js, jt) - lattice));
                scale = std::max(scale, std::abs(lattice));
            }
        CHECK(scale > 0.0);
        CHECK(e <= 1e-10 * scale);
    }
}

TEST_CASE("reconstruction converges to the time-continuous inner products") {
    // Reference: interior states at dt / 16 sampled on the coarse grid.
    const auto c = select_gamma(build_solid_torus(4, 2), GammaSelector::patch(0.5));
    auto rows = [&](double dt) {
        auto o = simulate(c, 9, SourceSpec{2.0, dt, 2.0}, 2);
        BoundaryInnerProducts bip(o.ds);
        std::array<std::vector<double>, 4> out;
        for (int k = 0; k < 4; ++k) out[k] = bip.row(0, 1, k);
        return out;
    };
    const double coarse = 1.0 / 32;
    auto ref = simulate(c, 9, SourceSpec{2.0, coarse / 16, 2.0}, 2);
    const int j0 = ref.ds->grid.index_of(0.0);
    const auto r1 = rows(coarse), r2 = rows(coarse / 2);
    for (int k = 0; k < 4; ++k) {
        CAPTURE(k);
        double e1 = 0.0, e2 = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < r1[k].size(); ++i) {
            const double x = ref.inner(0, 1, k, j0 + 16 * static_cast<int>(i), j0);
            e1 = std::max(e1, std::abs(r1[k][i] - x));
            e2 = std::max(e2, std::abs(r2[k][2 * i] - x));
            scale = std::max(scale, std::abs(x));
        }
        CAPTURE(e1 / scale);
        CAPTURE(e2 / scale);
        CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.2));
    }
}

TEST_CASE("reconstructed inner products match the oracle") {
    // Two refinements: the coarser torus has no interior vertices, so I^0 would vanish for t >= 0.
    auto o = simulate(select_gamma(build_solid_torus(4, 2), GammaSelector::patch(0.5)), 4,
                      SourceSpec{2.0, 1.0 / 64, 4.0}, 2);
    BoundaryInnerProducts bip(o.ds);
    const auto& g = o.ds->grid;
    for (int k = 0; k < 4; ++k) {
        CAPTURE(k);
        double e = 0.0, scale = 0.0;
        const auto r01 = bip.row(0, 1, k), r10 = bip.row(1, 0, k), r00 = bip.row(0, 0, k);
        const int j0 = g.index_of(0.0);
        for (std::size_t i = 0; i < r01.size(); ++i) {
            const int jt = j0 + static_cast<int>(i);
            const double a = o.inner(0, 1, k, jt, j0), b = o.inner(1, 0, k, jt, j0), c = o.inner(0, 0, k, jt, j0);
            e = std::max({e, std::abs(r01[i] - a), std::abs(r10[i] - b), std::abs(r00[i] - c)});
            scale = std::max({scale, std::abs(a), std::abs(b), std::abs(c)});
        }
        CAPTURE(e / scale);
        CHECK(e / scale < 1e-9);
        CHECK(r00[0] > 0.0);
        CHECK(bip.inner_product(0, 0, k, 0.0, 0.0) == r00[0]);
        // I_{f,h}(s, t) = I_{h,f}(t, s)
        const auto& g01 = bip.grid(0, 1, k);
        const auto& g10 = bip.grid(1, 0, k);
        CHECK(max_abs(g01.values - g10.values.transpose()) <= 1e-9 * max_abs(g01.values));
        // Only I = 0 on s = -tau is imposed; the second zero row comes out of the data.
        CHECK(g01.values.row(1).cwiseAbs().maxCoeff() <= 1e-9 * max_abs(g01.values));
        CHECK(std::abs(g01.at(0.25, 0.5) - o.inner(0, 1, k, g.index_of(0.5), g.index_of(0.25))) <= 1e-9 * scale);
    }
}

TEST_CASE("bilinearity and zero sources") {
    auto o = simulate(select_gamma(build_solid_torus(4, 1), GammaSelector::patch(0.5)), 5,
                      SourceSpec{2.0, 1.0 / 32, 2.0}, 2);
    auto ds = std::make_shared<ResponseDataset>(*o.ds);
    DatasetEntry sum = ds->entries[0];
    sum.source = ds->entries[0].source + ds->entries[1].source.scaled(2.0);
    for (int k = 1; k <= 3; ++k) sum.record.normal[k] += 2.0 * ds->entries[1].record.normal[k];
    DatasetEntry zero = ds->entries[0];
    zero.source = ds->entries[0].source.scaled(0.0);
    for (int k = 1; k <= 3; ++k) zero.record.normal[k].setZero();
    ds->entries.push_back(sum);
    ds->entries.push_back(zero);
    BoundaryInnerProducts bip(ds);
    double scale = 0.0;
    for (int k = 0; k < 4; ++k)
        for (double v : bip.row(2, 0, k)) scale = std::max(scale, std::abs(v));
    for (int k = 0; k < 4; ++k) {
        const auto a = bip.row(2, 0, k), b = bip.row(0, 0, k), c = bip.row(1, 0, k);
        double e = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i] - 2 * c[i]));
        CHECK(e <= 1e-10 * scale);
        for (double v : bip.row(3, 1, k)) CHECK(v == 0.0);
        CHECK(assemble_rhs(*ds, 0, 3, k).at(10, 20) == 0.0);
    }
}

TEST_CASE("physical Maxwell data give I^1 and I^2") {
    auto o = simulate(select_gamma(build_solid_torus(4, 1), GammaSelector::patch(0.5)), 6,
                      SourceSpec{2.0, 1.0 / 64, 2.0}, 2, true);
    BoundaryInnerProducts bip(o.ds);
    const int j0 = o.ds->grid.index_of(0.0);
    for (int k : {1, 2}) {
        const auto r = bip.row(0, 1, k);
        double e = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double a = o.inner(0, 1, k, j0 + static_cast<int>(i), j0);
            e = std::max(e, std::abs(r[i] - a));
            scale = std::max(scale, std::abs(a));
        }
        CAPTURE(k);
        CAPTURE(e / scale);
        CHECK(e / scale < 1e-9);
    }
}

TEST_CASE("Gamma support and grid checks") {
    auto o = simulate(select_gamma(build_solid_torus(4, 1), GammaSelector::patch(0.5)), 7,
                      SourceSpec{2.0, 1.0 / 16, 2.0}, 1);
    ResponseDataset bad = *o.ds;
    auto& t = bad.entries[0].source.terms[0];
    for (int v = 0; v < bad.patch.count(0); ++v)
        if (bad.patch.support_position(0, v) < 0) {
            t.profile[v] = 1.0;
            break;
        }
    CHECK_THROWS_AS(assemble_rhs(bad, 0, 0, 1), DatasetError);

    ResponseDataset missing = *o.ds;
    missing.entries[0].record.normal[1].resize(0, 0);
    CHECK_THROWS_AS(assemble_rhs(missing, 0, 0, 0), DatasetError);
}
