// Acceptance runner: one PASS/FAIL line per criterion.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mbetti/app/scenario.hpp"
#include "mbetti/boundary/errors.hpp"
#include "mbetti/homology.hpp"
#include "mbetti/inverse/blagov.hpp"

namespace fs = std::filesystem;
using namespace mbetti;
using Betti = std::array<int, 4>;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct MeshCase {
    std::string label;
    std::string mesh;
    std::array<int, 2> refinement{}; ///< per mesh level
    int tunnels = 1;
    Betti betti;
};

const std::vector<MeshCase> kMeshes = {
    {"ball", "ball", {2, 3}, 1, {1, 0, 0, 0}},
    {"solid_torus", "solid_torus", {1, 2}, 1, {1, 1, 0, 0}},
    {"tunneled_box(1)", "tunneled_box", {1, 2}, 1, {1, 1, 0, 0}},
    {"tunneled_box(2)", "tunneled_box", {1, 2}, 2, {1, 2, 0, 0}},
};

int g_level = 1;

std::string text(const Betti& b) {
    std::ostringstream os;
    os << '(' << b[0] << ',' << b[1] << ',' << b[2] << ',' << b[3] << ')';
    return os.str();
}

std::string sci(double x) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << x;
    return os.str();
}

Scenario scenario_for(const MeshCase& m, std::uint64_t seed, double gamma, const std::string& method) {
    Scenario s;
    s.mesh = m.mesh;
    s.refinement = m.refinement[g_level - 1];
    s.tunnels = m.tunnels;
    s.seed = seed;
    s.gamma = gamma;
    s.method = method;
    s.name = m.label;
    return s;
}

SimplicialComplex3 build(const MeshCase& m) {
    const int r = m.refinement[g_level - 1];
    if (m.mesh == "ball") return build_ball(r);
    if (m.mesh == "solid_torus") return build_solid_torus(4, r);
    return build_tunneled_box(m.tunnels, r);
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
    return v;
}

double max_abs(const SpMat& m) {
    double r = 0.0;
    for (int j = 0; j < m.outerSize(); ++j)
        for (SpMat::InnerIterator it(m, j); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

class Runner {
public:
    Runner(fs::path out, int threads, fs::path inverse_only) : out_(std::move(out)), threads_(threads), inverse_only_(std::move(inverse_only)) {}

    Outcome algebra();
    Outcome kernel();
    Outcome blagov();
    Outcome conservation();
    Outcome averaging();
    Outcome dirac_end_to_end();
    Outcome physical_end_to_end();
    Outcome invariance();
    Outcome boundary_only();

    /// Writes a complete-Dirac dataset and the oracle Betti numbers for the inverse-only binary.
    void write_dataset(const fs::path& dir);

private:
    const RunResult& run(const MeshCase& m, std::uint64_t seed, double gamma, const std::string& method);

    fs::path out_;
    int threads_;
    fs::path inverse_only_;
    std::map<std::tuple<std::string, std::uint64_t, double, std::string>, RunResult> runs_;
};

const RunResult& Runner::run(const MeshCase& m, std::uint64_t seed, double gamma, const std::string& method) {
    const auto key = std::make_tuple(m.label, seed, gamma, method);
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    std::ostringstream name;
    name << method << '/' << m.label << "_seed" << seed << "_gamma" << (gamma >= 1.0 ? std::string("all") : std::to_string(int(gamma * 100)));
    RunOptions opt;
    opt.threads = threads_;
    opt.out = out_ / "runs" / name.str();
    return runs_.emplace(key, run_scenario(scenario_for(m, seed, gamma, method), opt)).first->second;
}

Outcome Runner::algebra() {
    std::vector<SimplicialComplex3> meshes{build_single_tet()};
    for (const auto& m : kMeshes) meshes.push_back(build(m));
    std::mt19937_64 rng(11);
    double dd = 0.0, adj = 0.0, stokes = 0.0, skew = 0.0, dirac = 0.0;
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        const auto& c = meshes[i];
        const auto mat = MaterialField::random(c.count(3), 10.0, 100 + i);
        for (int k = 0; k + 1 < 3; ++k) {
            const IntSpMat prod = coboundary(c, k + 1) * coboundary(c, k);
            for (int j = 0; j < prod.outerSize(); ++j)
                for (IntSpMat::InnerIterator it(prod, j); it; ++it) dd = std::max(dd, double(std::abs(it.value())));
        }
        const auto g = assemble_graded(c, mat);
        for (int k = 1; k <= 3; ++k) {
            if (g.interior[k - 1].size() == 0) continue;
            for (int probe = 0; probe < 4; ++probe) {
                // (d alpha, beta) = (alpha, delta beta) for relative alpha.
                const Eigen::VectorXd alpha = g.extend_interior(k - 1, random_vector(g.interior[k - 1].size(), rng));
                const Eigen::VectorXd beta = random_vector(g.n[k], rng);
                const Eigen::VectorXd da = g.d[k - 1] * alpha, db = codifferential(g, k, beta);
                const Eigen::VectorXd gb = g.G[k] * beta;
                adj = std::max(adj, std::abs(da.dot(gb) - alpha.dot(g.G[k - 1] * db)) / (da.norm() * gb.norm()));
            }
        }
        for (int k = 1; k <= 3; ++k)
            for (int probe = 0; probe < 4; ++probe) {
                // (d eta, omega) - (eta, delta omega) = <t eta, n omega> for full eta.
                CochainState s = CochainState::zeros(g, false);
                s.w[k] = random_vector(g.n[k], rng);
                const Eigen::VectorXd eta = random_vector(g.n[k - 1], rng);
                const Eigen::VectorXd de = g.d[k - 1] * eta, gw = g.G[k] * s.w[k];
                const double lhs = de.dot(gw) - eta.dot(g.G[k - 1] * codifferential(g, k, s.w[k]));
                const double rhs = g.restrict_boundary(k - 1, eta).dot(trace_n(g, s, k));
                stokes = std::max(stokes, std::abs(lhs - rhs) / (de.norm() * gw.norm()));
            }
        const auto sys = assemble_dirac(c, mat);
        auto rel = [](double a, double b) { return b > 0.0 ? a / b : a; };
        skew = std::max({skew, rel(max_abs(SpMat(sys.K + SpMat(sys.K.transpose()))), max_abs(sys.K)),
                         rel(max_abs(SpMat(sys.A_full + SpMat(sys.A_full.transpose()))), max_abs(sys.A_full))});
        for (int probe = 0; probe < 8 && sys.size() > 0; ++probe) {
            // y^T (G D + D^T G) x = 0.
            const Eigen::VectorXd x = random_vector(sys.size(), rng), y = random_vector(sys.size(), rng);
            const Eigen::VectorXd dx = sys.apply(x), dy = sys.apply(y);
            const double r = y.dot(sys.G * dx) + dy.dot(sys.G * x);
            const double scale = (sys.G * y).norm() * dx.norm() + (sys.G * x).norm() * dy.norm();
            dirac = std::max(dirac, rel(std::abs(r), scale));
        }
    }
    const bool pass = dd == 0.0 && adj <= 1e-12 && stokes <= 1e-12 && skew <= 1e-12 && dirac <= 1e-10;
    return {pass, std::to_string(meshes.size()) + " meshes: max|dd| = " + sci(dd) + ", adjointness " + sci(adj) +
                      ", Stokes " + sci(stokes) + ", K skew " + sci(skew) + ", GD+D^TG " + sci(dirac)};
}

Outcome Runner::kernel() {
    bool pass = true;
    std::string detail;
    for (const auto& m : kMeshes) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto c = build(m);
        const auto rel = betti(c, HomologyMode::relative);
        int dofs = 0;
        bool ok = rel == Betti{m.betti[3], m.betti[2], m.betti[1], m.betti[0]};
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto sys = assemble_dirac(c, MaterialField::random(c.count(3), 10.0, seed));
            dofs = sys.size();
            ok = ok && harmonic_kernel(sys).dims == rel;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = ok && secs <= 120.0 && dofs <= 20000;
        pass = pass && ok;
        std::ostringstream os;
        os << m.label << ' ' << text(rel) << (ok ? "" : " MISMATCH") << " [" << dofs << " dofs, " << std::fixed
           << std::setprecision(1) << secs << "s]; ";
        detail += os.str();
    }
    return {pass, "3 seeds each: " + detail};
}

Outcome Runner::blagov() {
    // tau = 2, dt = tau / 128; the refined torus has interior vertices, so all four degrees are populated.
    const auto base = select_gamma(build_solid_torus(4, 2), GammaSelector::patch(0.25));
    const auto mat = MaterialField::random(base.count(3), 10.0, 9);
    const auto sys = assemble_dirac(base, mat);
    const double tau = 2.0, dt = tau / 128, t_end = 2.0;
    struct Run {
        std::shared_ptr<ResponseDataset> ds;
        std::vector<std::vector<CochainState>> states;
    };
    auto simulate = [&](double step) {
        ForwardSolver solver(base, sys, step);
        const SourceSpec spec{tau, step, t_end};
        Run r;
        r.ds = std::make_shared<ResponseDataset>();
        r.ds->patch = solver.patch();
        r.ds->grid = spec.grid();
        r.ds->tau = tau;
        r.ds->method = "complete-dirac";
        for (int j = 0; j < 2; ++j) {
            const auto f = make_source(solver.patch(), 500 + j, spec);
            auto tr = solver.evolve(f, {false, true, true, true}, true);
            r.ds->entries.push_back({f, tr.record});
            r.states.push_back(std::move(tr.states));
        }
        return r;
    };
    auto inner = [&](const Run& r, int f, int h, int k, int jt, int js) {
        return r.states[f][jt].w[k].dot(sys.ops.G[k] * r.states[h][js].w[k]);
    };
    const Run coarse = simulate(dt), fine = simulate(dt / 2), ref = simulate(dt / 16);
    BoundaryInnerProducts bc(coarse.ds), bf(fine.ds);
    const int j0c = coarse.ds->grid.index_of(0.0), j0r = ref.ds->grid.index_of(0.0);

    double fidelity = 0.0, order_lo = 1e9, order_hi = -1e9;
    for (int k = 0; k < 4; ++k) {
        double e = 0.0, scale = 0.0, e1 = 0.0, e2 = 0.0, sref = 0.0;
        for (auto [f, h] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{0, 0}}) {
            const auto rc = bc.row(f, h, k), rf = bf.row(f, h, k);
            for (std::size_t i = 0; i < rc.size(); ++i) {
                const double x = inner(coarse, f, h, k, j0c + int(i), j0c);
                e = std::max(e, std::abs(rc[i] - x));
                scale = std::max(scale, std::abs(x));
                const double y = inner(ref, f, h, k, j0r + 16 * int(i), j0r);
                e1 = std::max(e1, std::abs(rc[i] - y));
                e2 = std::max(e2, std::abs(rf[2 * i] - y));
                sref = std::max(sref, std::abs(y));
            }
        }
        if (scale == 0.0 || sref == 0.0) return {false, "degree " + std::to_string(k) + " carries no energy"};
        fidelity = std::max(fidelity, e / scale);
        const double order = std::log2(e1 / e2);
        order_lo = std::min(order_lo, order);
        order_hi = std::max(order_hi, order);
    }
    const bool pass = fidelity <= 1e-4 && order_lo >= 1.6 && order_hi <= 2.4;
    std::ostringstream os;
    os << "solid_torus, dt = tau/128, k = 0..3: error vs interior oracle " << sci(fidelity) << ", order under halving "
       << std::fixed << std::setprecision(2) << order_lo << ".." << order_hi;
    return {pass, os.str()};
}

Outcome Runner::conservation() {
    std::vector<SimplicialComplex3> meshes{build_single_tet()};
    for (const auto& m : kMeshes) meshes.push_back(build(m));
    std::mt19937_64 rng(21);
    double drift = 0.0;
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        const auto sys = assemble_dirac(meshes[i], MaterialField::random(meshes[i].count(3), 10.0, 200 + i));
        for (double dt : {1.0 / 16, 4.0 / 128}) {
            ForwardSolver solver(meshes[i], sys, dt);
            const Eigen::VectorXd v = random_vector(sys.size(), rng);
            const double e0 = v.dot(sys.G * v);
            const Eigen::VectorXd w = solver.step_free(v, 1000);
            drift = std::max(drift, std::abs(w.dot(sys.G * w) - e0) / e0);
        }
    }
    return {drift <= 1e-11, std::to_string(meshes.size()) + " meshes, dt in {1/16, 1/32}: max relative G-norm drift " +
                                sci(drift) + " per 1000 steps"};
}

Outcome Runner::averaging() {
    const auto c = build_solid_torus(4, 1);
    const auto sys = assemble_dirac(c, MaterialField::random(c.count(3), 10.0, 3));
    const auto hk = harmonic_kernel(sys);
    const double dt = 1.0 / 16, gap = spectral_gap(sys);
    const double T0 = std::ceil(8.0 / gap);
    ForwardSolver solver(c, sys, dt);
    const SourceSpec spec{4.0, dt, 32 * T0 + 4.0};
    auto ds = std::make_shared<ResponseDataset>();
    ds->patch = solver.patch();
    ds->grid = spec.grid();
    ds->tau = spec.tau;
    ds->method = "complete-dirac";
    const int n = 3;
    std::vector<CochainState> at_zero;
    for (int j = 0; j < n; ++j) {
        const auto f = make_source(solver.patch(), 40 + j, spec);
        auto tr = solver.evolve(f, {false, true, true, true}, true);
        at_zero.push_back(tr.states[spec.grid().index_of(0.0)]);
        ds->entries.push_back({f, tr.record});
    }
    BoundaryInnerProducts bip(ds);

    double worst = 0.0;
    std::string ladder;
    for (int k : {2, 3}) {
        Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(n, n);
        for (const auto& b : hk.basis) {
            if (b.w[k].size() == 0 || b.w[k].norm() == 0.0) continue;
            Eigen::VectorXd coef(n);
            for (int j = 0; j < n; ++j) coef[j] = sys.ops.restrict_interior(k, at_zero[j].w[k]).dot(sys.ops.G_II[k] * b.w[k]);
            oracle += coef * coef.transpose();
        }
        const double scale = oracle.cwiseAbs().maxCoeff();
        if (scale == 0.0) return {false, "no harmonic component in degree " + std::to_string(k)};
        auto rms = [&](double T) {
            double acc = 0.0;
            int m = 0;
            for (double t = T; t <= 2 * T + 1e-12; t += 0.25, ++m) {
                const double e = (gram_matrix(bip, {0, 1, 2}, k, Averaging{t, Window::cesaro}).P - oracle).cwiseAbs().maxCoeff() / scale;
                acc += e * e;
            }
            return std::sqrt(acc / m);
        };
        std::ostringstream os;
        os << "k=" << k << ':';
        double prev = rms(T0);
        os << ' ' << sci(prev);
        for (double T : {2 * T0, 4 * T0, 8 * T0, 16 * T0}) {
            const double e = rms(T);
            worst = std::max(worst, e / prev);
            os << ' ' << sci(e);
            prev = e;
        }
        ladder += os.str() + "; ";
    }
    std::ostringstream os;
    os << "solid_torus, Cesaro, T = " << T0 << " x {1,2,4,8,16}: " << ladder << "worst ratio " << std::fixed
       << std::setprecision(3) << worst;
    return {worst <= 0.6, os.str()};
}

Outcome Runner::dirac_end_to_end() {
    bool pass = true;
    std::string detail;
    for (const auto& m : kMeshes) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& r = run(m, 1, 0.25, "complete-dirac");
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& d : r.report.diagnostics) gap = std::min(gap, d.estimate.gap_ratio);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = r.report.converged && r.report.betti == m.betti && r.pass && gap >= 10.0 && secs <= 900.0;
        pass = pass && ok;
        std::ostringstream os;
        os << m.label << ' ' << text(r.report.betti) << (ok ? "" : " expected " + text(m.betti)) << " gap "
           << (std::isinf(gap) ? std::string("inf") : sci(gap)) << ", T " << r.report.T_used << ", " << std::fixed
           << std::setprecision(1) << secs << "s; ";
        detail += os.str();
    }
    return {pass, "25% patch: " + detail};
}

Outcome Runner::physical_end_to_end() {
    bool pass = true;
    std::string detail;
    for (const auto& m : kMeshes) {
        const auto& r = run(m, 1, 1.0, "physical-maxwell");
        const auto c = build(m);
        const int b1 = r.report.betti[1];
        const int b2 = b1 >= 0 ? beta2_from_boundary(b1, c.boundary_patch()) : -1;
        const auto oracle = betti(c, HomologyMode::absolute);
        const bool ok = r.report.converged && b1 == m.betti[1] && b2 == 0 && r.report.betti[2] == b2 && oracle[1] == b1 &&
                        oracle[2] == b2;
        pass = pass && ok;
        detail += m.label + " b1=" + std::to_string(b1) + " b2=" + std::to_string(b2) + (ok ? "" : " MISMATCH") + "; ";
    }
    return {pass, "Gamma = whole boundary: " + detail};
}

Outcome Runner::invariance() {
    bool pass = true;
    std::string detail;
    for (const auto& m : kMeshes) {
        std::set<std::pair<Betti, Betti>> seen;
        int runs = 0;
        for (std::uint64_t seed : {1u, 2u, 3u})
            for (double gamma : {1.0, 0.25}) {
                const auto& r = run(m, seed, gamma, "complete-dirac");
                seen.insert({r.report.betti, r.report.relative});
                pass = pass && r.report.converged;
                ++runs;
            }
        const bool ok = seen.size() == 1 && seen.begin()->first == m.betti;
        pass = pass && ok;
        detail += m.label + ' ' + (seen.size() == 1 ? text(seen.begin()->first) : std::string("DIFFERS")) + " x" +
                  std::to_string(runs) + "; ";
    }
    return {pass, "3 seeds x Gamma {whole, 25%}: " + detail};
}

void Runner::write_dataset(const fs::path& dir) {
    fs::create_directories(dir);
    const auto& m = kMeshes[3];
    Scenario s = scenario_for(m, 1, 0.25, "complete-dirac");
    const auto st = prepare(s);
    simulate_dataset(st.complex, st.materials, dataset_spec(s, st, threads_)).save(dir / "dataset.json");
    std::ofstream(dir / "expected.json") << nlohmann::json{{"mesh", m.label}, {"betti", betti(st.complex, HomologyMode::absolute)}}.dump(2)
                                         << '\n';
}

Outcome Runner::boundary_only() {
    if (inverse_only_.empty() || !fs::exists(inverse_only_)) return {false, "inverse-only binary not found"};
    const fs::path dir = out_ / "inverse_only";
    write_dataset(dir);
    const std::string cmd = '"' + inverse_only_.string() + "\" --dataset \"" + (dir / "dataset.json").string() +
                            "\" --expect \"" + (dir / "expected.json").string() + "\" > \"" + (dir / "log.txt").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream log(dir / "log.txt");
    std::string line, last;
    while (std::getline(log, line))
        if (!line.empty()) last = line;
    return {rc == 0, "recovery binary linked against the boundary and inverse libraries only: " + last};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::string out = "acceptance_out", inverse_only, dataset_dir;
    std::vector<int> only;
    int threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    app.add_option("--out", out, "artifact directory");
    app.add_option("--inverse-only", inverse_only, "path of the inverse-only recovery binary");
    app.add_option("--only", only, "criteria to run (default all)");
    app.add_option("--level", g_level, "mesh level: 1 (about 300-500 DOFs) or 2 (about 2-5k DOFs)")->check(CLI::Range(1, 2));
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--write-dataset", dataset_dir, "write the inverse-only dataset and exit");
    CLI11_PARSE(app, argc, argv);

    Runner runner(out, threads, inverse_only);
    if (!dataset_dir.empty()) {
        runner.write_dataset(dataset_dir);
        return 0;
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"exact algebra", [&] { return runner.algebra(); }},
        {"kernel = topology", [&] { return runner.kernel(); }},
        {"boundary reconstruction fidelity", [&] { return runner.blagov(); }},
        {"conservation", [&] { return runner.conservation(); }},
        {"averaging law", [&] { return runner.averaging(); }},
        {"complete-Dirac end to end", [&] { return runner.dirac_end_to_end(); }},
        {"physical-Maxwell end to end", [&] { return runner.physical_end_to_end(); }},
        {"invariance", [&] { return runner.invariance(); }},
        {"boundary-only recovery", [&] { return runner.boundary_only(); }},
    };
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << criteria[i].first << " (" << std::fixed
                  << std::setprecision(1) << secs << "s): " << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
