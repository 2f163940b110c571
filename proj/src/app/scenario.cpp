#include "mbetti/app/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <random>
#include <typeinfo>

#include "mbetti/boundary/errors.hpp"
#include "mbetti/homology.hpp"
#include "mbetti/inverse/blagov.hpp"

namespace mbetti {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario field '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ValidationError("unknown scenario field '" + where + key + "'");
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write " + path.string());
    out << std::setw(2) << j << '\n';
}

fs::path out_dir(const Scenario& s, const RunOptions& opt) {
    const fs::path dir = opt.out.empty() ? s.out : opt.out;
    fs::create_directories(dir / "diagnostics");
    return dir;
}

SimplicialComplex3 build_mesh(const Scenario& s) {
    if (s.mesh == "single_tet") return build_single_tet();
    if (s.mesh == "ball") return build_ball(s.refinement);
    if (s.mesh == "solid_torus") return build_solid_torus(s.segments, s.refinement);
    if (s.mesh == "tunneled_box") return build_tunneled_box(s.tunnels, std::max(1, s.refinement));
    if (s.mesh == "file") return load_complex(s.mesh_file);
    throw ValidationError("unknown mesh generator '" + s.mesh + "'");
}

void write_rows_csv(BoundaryInnerProducts& bip, const std::vector<int>& degrees, const fs::path& path) {
    std::ofstream out(path);
    out << "degree,source,t,value\n" << std::setprecision(17);
    const double step = bip.dataset().grid.step;
    for (int k : degrees)
        for (int f = 0; f < bip.n_sources(); ++f) {
            const auto row = bip.row(f, f, k);
            const std::size_t stride = std::max<std::size_t>(1, row.size() / 2000);
            for (std::size_t i = 0; i < row.size(); i += stride)
                out << k << ',' << f << ',' << static_cast<double>(i) * step << ',' << row[i] << '\n';
        }
}

void write_history_csv(const BettiReport& rep, const fs::path& path) {
    std::ofstream out(path);
    out << "n_sources,T,valid,degree,count\n";
    for (const auto& h : rep.history)
        for (const auto& [deg, count] : h.at("counts").items())
            out << h.at("n_sources") << ',' << h.at("T").get<double>() << ',' << h.at("valid").get<bool>() << ','
                << deg << ',' << count << '\n';
}

CheckItem check(std::string name, double value, double tol, std::string detail = {}) {
    return CheckItem{std::move(name), value <= tol, value, tol, std::move(detail)};
}

double max_abs(const SpMat& m) {
    double r = 0.0;
    for (int o = 0; o < m.outerSize(); ++o)
        for (SpMat::InnerIterator it(m, o); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

std::string dims_text(const std::array<int, 4>& d) {
    return "(" + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) + "," +
           std::to_string(d[3]) + ")";
}

} // namespace

Scenario Scenario::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
    check_keys(j, {"name", "mesh", "materials", "gamma", "dt", "tau", "T_max", "gap_factor", "T_sweep", "n_sources",
                   "initial_sources", "seed", "method", "out"},
               "");
    Scenario s;
    read(j, "name", s.name);
    if (j.contains("mesh")) {
        const json& m = j.at("mesh");
        if (m.is_string()) {
            s.mesh = m.get<std::string>();
        } else {
            check_keys(m, {"generator", "refinement", "segments", "tunnels", "file"}, "mesh.");
            read(m, "generator", s.mesh);
            read(m, "refinement", s.refinement);
            read(m, "segments", s.segments);
            read(m, "tunnels", s.tunnels);
            std::string file;
            read(m, "file", file);
            if (!file.empty()) s.mesh = "file", s.mesh_file = file;
        }
    }
    if (j.contains("materials")) {
        const json& m = j.at("materials");
        if (m.is_string()) {
            s.materials = m.get<std::string>();
        } else {
            check_keys(m, {"kind", "condition", "file"}, "materials.");
            read(m, "kind", s.materials);
            read(m, "condition", s.condition);
            std::string file;
            read(m, "file", file);
            if (!file.empty()) s.materials = "file", s.material_file = file;
        }
    }
    if (j.contains("gamma")) {
        const json& g = j.at("gamma");
        if (g.is_number()) {
            s.gamma = g.get<double>();
        } else if (g.is_string()) {
            if (g.get<std::string>() != "all") throw ValidationError("gamma must be \"all\" or a fraction");
            s.gamma = 1.0;
        } else {
            check_keys(g, {"fraction", "seed"}, "gamma.");
            read(g, "fraction", s.gamma);
            read(g, "seed", s.gamma_seed);
        }
    }
    read(j, "dt", s.dt);
    read(j, "tau", s.tau);
    read(j, "T_max", s.T_max);
    read(j, "gap_factor", s.gap_factor);
    read(j, "T_sweep", s.T_sweep);
    read(j, "n_sources", s.n_sources);
    read(j, "initial_sources", s.initial_sources);
    read(j, "seed", s.seed);
    read(j, "method", s.method);
    std::string out;
    read(j, "out", out);
    if (!out.empty()) s.out = out;
    s.validate();
    return s;
}

Scenario Scenario::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("scenario " + path.string() + " is not valid JSON: " + e.what());
    }
    Scenario s = from_json(j);
    // Relative files resolve against the scenario's directory.
    const fs::path base = path.parent_path();
    if (!s.mesh_file.empty() && s.mesh_file.is_relative()) s.mesh_file = base / s.mesh_file;
    if (!s.material_file.empty() && s.material_file.is_relative()) s.material_file = base / s.material_file;
    return s;
}

json Scenario::to_json() const {
    json m{{"generator", mesh}, {"refinement", refinement}, {"segments", segments}, {"tunnels", tunnels}};
    if (mesh == "file") m["file"] = mesh_file.string();
    json mat{{"kind", materials}, {"condition", condition}};
    if (materials == "file") mat["file"] = material_file.string();
    return json{{"name", name},
                {"mesh", m},
                {"materials", mat},
                {"gamma", {{"fraction", gamma}, {"seed", gamma_seed}}},
                {"dt", dt},
                {"tau", tau},
                {"T_max", T_max},
                {"gap_factor", gap_factor},
                {"T_sweep", T_sweep},
                {"n_sources", n_sources},
                {"initial_sources", initial_sources},
                {"seed", seed},
                {"method", method},
                {"out", out.string()}};
}

void Scenario::validate() const {
    static const std::vector<std::string> meshes{"single_tet", "ball", "solid_torus", "tunneled_box", "file"};
    if (std::find(meshes.begin(), meshes.end(), mesh) == meshes.end())
        throw ValidationError("mesh: unknown generator '" + mesh + "'");
    if (mesh == "file" && mesh_file.empty()) throw ValidationError("mesh: file generator needs a path");
    if (refinement < 0 || segments < 3 || tunnels < 0) throw ValidationError("mesh: invalid generator parameters");
    if (materials != "random" && materials != "identity" && materials != "file")
        throw ValidationError("materials: kind must be random, identity or file");
    if (!(condition >= 1.0)) throw ValidationError("materials: condition bound must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma: fraction must lie in (0, 1]");
    if (!(dt > 0.0) || !(tau > 0.0) || !(gap_factor > 0.0) || T_max < 0.0)
        throw ValidationError("time parameters must be positive");
    for (std::size_t i = 0; i < T_sweep.size(); ++i) {
        if (!(T_sweep[i] > 0.0)) throw ValidationError("T_sweep: entries must be positive");
        if (i > 0 && !(T_sweep[i] > T_sweep[i - 1])) throw ValidationError("T_sweep: must be increasing");
    }
    if (T_max > 0.0 && !T_sweep.empty() && T_sweep.back() > T_max + 1e-12)
        throw ValidationError("T_sweep: last entry exceeds T_max");
    if (n_sources < 1 || initial_sources < 1) throw ValidationError("n_sources: must be positive");
    if (method != "complete-dirac" && method != "physical-maxwell" && method != "corollary")
        throw ValidationError("method: must be complete-dirac, physical-maxwell or corollary");
}

ScenarioSetup prepare(const Scenario& s) {
    s.validate();
    ScenarioSetup st;
    st.complex = build_mesh(s);
    if (s.gamma < 1.0) st.complex = select_gamma(st.complex, GammaSelector::patch(s.gamma, s.gamma_seed));
    const int n_tets = st.complex.count(3);
    if (s.materials == "identity")
        st.materials = MaterialField::identity(n_tets);
    else if (s.materials == "file")
        st.materials = MaterialField::load(s.material_file, n_tets);
    else
        st.materials = MaterialField::random(n_tets, s.condition, s.seed);
    st.system = assemble_dirac(st.complex, st.materials);
    st.gap = spectral_gap(st.system);
    if (s.T_max > 0.0) {
        st.T = s.T_max;
    } else {
        // Without nonzero spectrum every average is already the projection.
        st.T = std::isfinite(st.gap) ? std::ceil(s.gap_factor / st.gap) : 2.0 * s.tau;
    }
    st.T = std::round(st.T / s.dt) * s.dt;
    return st;
}

DatasetSpec dataset_spec(const Scenario& s, const ScenarioSetup& setup, int threads) {
    DatasetSpec spec;
    spec.source = SourceSpec{s.tau, s.dt, setup.T + s.tau};
    spec.n_sources = s.n_sources;
    spec.seed = s.seed;
    spec.threads = threads;
    if (s.method != "complete-dirac") {
        spec.method = DatasetMethod::physical_maxwell;
        spec.source.degrees = {false, true, false};
    }
    return spec;
}

RecoverSpec recover_spec(const Scenario& s, int threads) {
    RecoverSpec r;
    r.initial_sources = std::min(s.initial_sources, s.n_sources);
    r.max_sources = s.n_sources;
    r.T_sweep = s.T_sweep;
    r.threads = threads;
    return r;
}

RunResult run_scenario(const Scenario& s, const RunOptions& opt) {
    const fs::path dir = out_dir(s, opt);
    const ScenarioSetup st = prepare(s);
    auto ds = std::make_shared<ResponseDataset>(simulate_dataset(st.complex, st.materials, dataset_spec(s, st, opt.threads)));

    // From here on only the boundary dataset is used.
    BoundaryInnerProducts bip(ds);
    const RecoverSpec rspec = recover_spec(s, opt.threads);
    RunResult res;
    res.report = s.method == "complete-dirac" ? betti_from_dirac(bip, rspec) : beta1_physical(bip, rspec);
    if (s.method == "corollary") res.report.method = "corollary";

    res.oracle = betti(st.complex, HomologyMode::absolute);
    json per_degree = json::array();
    res.pass = res.report.converged;
    for (int k = 0; k < 4; ++k) {
        res.match[k] = res.report.betti[k] == res.oracle[k];
        res.pass = res.pass && res.match[k];
        per_degree.push_back({{"degree", k},
                              {"recovered", res.report.betti[k]},
                              {"oracle", res.oracle[k]},
                              {"status", res.match[k] ? "PASS" : "FAIL"}});
    }
    res.comparison = json{{"scenario", s.name},
                          {"method", res.report.method},
                          {"spectral_gap", st.gap},
                          {"T", st.T},
                          {"degrees", per_degree},
                          {"status", res.pass ? "PASS" : "FAIL"}};

    json report = res.report.to_json();
    report["scenario"] = s.to_json();
    report["spectral_gap"] = st.gap;
    report["T_planned"] = st.T;
    write_json(dir / "betti_report.json", report);
    write_json(dir / "oracle_comparison.json", res.comparison);
    res.report.write_ladders_csv(dir / "diagnostics" / "ladders.csv");
    write_history_csv(res.report, dir / "diagnostics" / "history.csv");
    const std::vector<int> degrees = s.method == "complete-dirac" ? std::vector<int>{0, 1, 2, 3} : std::vector<int>{2};
    write_rows_csv(bip, degrees, dir / "diagnostics" / "rows.csv");
    if (opt.dump_grids && ds->entries.size() >= 2) {
        const double t_max = std::min(square_horizon(ds->grid), 2.0 * s.tau);
        for (int k : degrees)
            wave_solve(assemble_rhs(*ds, 0, 1, k), t_max)
                .write_csv(dir / "diagnostics" / ("grid_0_1_k" + std::to_string(k) + ".csv"));
    }
    return res;
}

std::vector<CheckItem> verify_scenario(const Scenario& s, const RunOptions& opt) {
    const fs::path dir = out_dir(s, opt);
    std::vector<CheckItem> items;
    auto finish = [&] {
        write_json(dir / "verify_report.json", checklist_json(items));
        return items;
    };

    ScenarioSetup st;
    try {
        st = prepare(s);
        items.push_back(check("mesh validation", 0.0, 0.0, std::to_string(st.complex.count(3)) + " tetrahedra"));
    } catch (const Error& e) {
        items.push_back(CheckItem{"mesh validation", false, 1.0, 0.0, e.kind() + ": " + e.what()});
        return finish();
    }
    const auto& c = st.complex;
    const auto& sys = st.system;

    // Discrete Stokes: d_{k+1} d_k = 0 exactly.
    double dd = 0.0;
    for (int k = 0; k + 1 < 3; ++k)
        dd = std::max(dd, max_abs(SpMat((coboundary(c, k + 1) * coboundary(c, k)).cast<double>())));
    items.push_back(check("stokes d∘d = 0", dd, 0.0));

    // Adjointness of d and delta in the material inner products: K and A_full are skew.
    const double kn = max_abs(sys.K);
    const double skew = std::max(max_abs(SpMat(sys.K + SpMat(sys.K.transpose()))),
                                 max_abs(SpMat(sys.A_full + SpMat(sys.A_full.transpose()))));
    items.push_back(check("adjointness residual", kn > 0.0 ? skew / kn : skew, 1e-12));

    // Energy conservation of the free Cayley evolution over 1000 steps.
    {
        ForwardSolver solver(c, sys, s.dt);
        std::mt19937_64 rng(s.seed);
        std::normal_distribution<double> normal;
        Eigen::VectorXd v(sys.size());
        for (int i = 0; i < v.size(); ++i) v[i] = normal(rng);
        const double e0 = v.dot(sys.G * v);
        const Eigen::VectorXd w = solver.step_free(v, 1000);
        items.push_back(check("energy drift per 1000 steps", std::abs(w.dot(sys.G * w) - e0) / e0, 1e-11));
    }

    // Kernel dimensions against the exact homology, for two material fields.
    {
        const auto rel = betti(c, HomologyMode::relative);
        const auto abs = betti(c, HomologyMode::absolute);
        bool dual = true;
        for (int k = 0; k < 4; ++k) dual = dual && rel[k] == abs[3 - k];
        items.push_back(CheckItem{"poincare-lefschetz duality", dual, dual ? 0.0 : 1.0, 0.0,
                                  "absolute " + dims_text(abs) + ", relative " + dims_text(rel)});
        const auto dims = harmonic_kernel(sys).dims;
        items.push_back(CheckItem{"kernel dims vs oracle", dims == rel, dims == rel ? 0.0 : 1.0, 0.0,
                                  "kernel " + dims_text(dims) + ", relative Betti " + dims_text(rel)});
        const auto other = MaterialField::random(c.count(3), s.condition, s.seed + 1);
        const auto dims2 = harmonic_kernel(assemble_dirac(c, other)).dims;
        items.push_back(CheckItem{"kernel dims, second material field", dims2 == dims, dims2 == dims ? 0.0 : 1.0, 0.0,
                                  "kernel " + dims_text(dims2)});
    }

    // Boundary reconstruction against interior states on a short run.
    {
        ForwardSolver solver(c, sys, s.dt);
        const SourceSpec spec{s.tau, s.dt, 2.0 * s.tau};
        auto ds = std::make_shared<ResponseDataset>();
        ds->patch = solver.patch();
        ds->grid = spec.grid();
        ds->tau = spec.tau;
        ds->method = "complete-dirac";
        std::vector<std::vector<CochainState>> states;
        for (int j = 0; j < 2; ++j) {
            const auto f = make_source(solver.patch(), s.seed * 1000 + j, spec);
            auto tr = solver.evolve(f, {false, true, true, true}, true);
            ds->entries.push_back({f, tr.record});
            states.push_back(std::move(tr.states));
        }
        BoundaryInnerProducts bip(ds);
        const int j0 = ds->grid.index_of(0.0);
        double err = 0.0, scale = 0.0;
        for (int k = 0; k < 4; ++k) {
            const auto row = bip.row(0, 1, k);
            for (std::size_t i = 0; i < row.size(); ++i) {
                const double x = states[0][j0 + i].w[k].dot(sys.ops.G[k] * states[1][j0].w[k]);
                err = std::max(err, std::abs(row[i] - x));
                scale = std::max(scale, std::abs(x));
            }
        }
        items.push_back(check("boundary reconstruction vs interior", scale > 0.0 ? err / scale : err, 1e-8));
    }
    return finish();
}

json checklist_json(const std::vector<CheckItem>& items) {
    json list = json::array();
    bool all = !items.empty();
    for (const auto& it : items) {
        all = all && it.pass;
        list.push_back({{"check", it.name},
                        {"status", it.pass ? "PASS" : "FAIL"},
                        {"value", it.value},
                        {"tolerance", it.tolerance},
                        {"detail", it.detail}});
    }
    return json{{"checks", list}, {"status", all ? "PASS" : "FAIL"}};
}

json error_json(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return json{{"kind", err->kind()}, {"message", err->what()}};
    return json{{"kind", "internal"}, {"message", e.what()}};
}

} // namespace mbetti
