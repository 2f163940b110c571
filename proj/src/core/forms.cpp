#include "mbetti/forms.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

struct MassSolvers {
    std::array<Eigen::SimplicialLDLT<SpMat>, 4> interior;
};

namespace {

bool is_spd(const Eigen::Matrix3d& m) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) return false;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > 0.0;
}

Eigen::Matrix3d random_spd(std::mt19937_64& rng, double condition_bound) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(-0.5 * std::log(condition_bound), 0.5 * std::log(condition_bound));
    Eigen::Matrix3d a;
    for (int i = 0; i < 9; ++i) a(i) = normal(rng);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
    Eigen::Matrix3d q = qr.householderQ();
    Eigen::Vector3d lam;
    for (int i = 0; i < 3; ++i) lam[i] = std::exp(uni(rng));
    Eigen::Matrix3d m = q * lam.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

Eigen::Matrix3d matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::array<std::array<double, 3>, 3>>();
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = rows[r][c];
    return m;
}

nlohmann::json matrix_to_json(const Eigen::Matrix3d& m) {
    return nlohmann::json::array({{m(0, 0), m(0, 1), m(0, 2)}, {m(1, 0), m(1, 1), m(1, 2)}, {m(2, 0), m(2, 1), m(2, 2)}});
}

} // namespace

MaterialField MaterialField::identity(int n_tets) {
    MaterialField m;
    m.eps.assign(n_tets, Eigen::Matrix3d::Identity());
    m.mu.assign(n_tets, Eigen::Matrix3d::Identity());
    return m;
}

MaterialField MaterialField::random(int n_tets, double condition_bound, std::uint64_t seed) {
    if (!(condition_bound >= 1.0)) throw MaterialError("condition bound must be at least 1");
    std::mt19937_64 rng(seed);
    MaterialField m;
    m.eps.reserve(n_tets);
    m.mu.reserve(n_tets);
    for (int t = 0; t < n_tets; ++t) {
        m.eps.push_back(random_spd(rng, condition_bound));
        m.mu.push_back(random_spd(rng, condition_bound));
    }
    return m;
}

void MaterialField::validate() const {
    if (eps.size() != mu.size()) throw MaterialError("eps and mu have different lengths");
    for (int t = 0; t < size(); ++t) {
        if (!is_spd(eps[t])) throw MaterialError("eps on tet " + std::to_string(t) + " is not symmetric positive definite");
        if (!is_spd(mu[t])) throw MaterialError("mu on tet " + std::to_string(t) + " is not symmetric positive definite");
    }
}

MaterialField MaterialField::load(const std::filesystem::path& path, int n_tets) {
    std::ifstream in(path);
    if (!in) throw MaterialError("cannot open material file " + path.string());
    MaterialField m = identity(n_tets);
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.contains("default_eps")) m.eps.assign(n_tets, matrix_from_json(j["default_eps"]));
        if (j.contains("default_mu")) m.mu.assign(n_tets, matrix_from_json(j["default_mu"]));
        if (j.contains("per_tet"))
            for (const auto& [key, val] : j["per_tet"].items()) {
                const int t = std::stoi(key);
                if (t < 0 || t >= n_tets) throw MaterialError("material entry for missing tet " + key);
                if (val.contains("eps")) m.eps[t] = matrix_from_json(val["eps"]);
                if (val.contains("mu")) m.mu[t] = matrix_from_json(val["mu"]);
            }
    } catch (const nlohmann::json::exception& e) {
        throw MaterialError("malformed material file " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw MaterialError("malformed tet index in material file " + path.string());
    }
    m.validate();
    return m;
}

void MaterialField::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["default_eps"] = matrix_to_json(Eigen::Matrix3d::Identity());
    j["default_mu"] = matrix_to_json(Eigen::Matrix3d::Identity());
    auto& per = j["per_tet"] = nlohmann::json::object();
    for (int t = 0; t < size(); ++t) per[std::to_string(t)] = {{"eps", matrix_to_json(eps[t])}, {"mu", matrix_to_json(mu[t])}};
    std::ofstream out(path);
    if (!out) throw MaterialError("cannot write material file " + path.string());
    out << j.dump() << "\n";
}

Eigen::Matrix3d material_metric(const Eigen::Matrix3d& m, const Eigen::Matrix3d& g0) {
    if (!is_spd(m)) throw MaterialError("material tensor is not symmetric positive definite");
    if (!is_spd(g0)) throw MaterialError("background metric is not symmetric positive definite");
    const Eigen::Matrix3d inv_metric = m * g0.inverse() / m.determinant();
    const double scale = inv_metric.cwiseAbs().maxCoeff();
    if ((inv_metric - inv_metric.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw MaterialError("material tensor is not symmetric with respect to the background metric");
    Eigen::Matrix3d g = inv_metric.inverse();
    g = 0.5 * (g + g.transpose());
    if (!is_spd(g)) throw MaterialError("induced metric is not positive definite");
    return g;
}

IntSpMat coboundary(const SimplicialComplex3& c, int k) {
    std::vector<Eigen::Triplet<int>> trip;
    IntSpMat d;
    switch (k) {
    case 0:
        for (int e = 0; e < c.count(1); ++e) {
            trip.emplace_back(e, c.edges()[e][0], -1);
            trip.emplace_back(e, c.edges()[e][1], 1);
        }
        d.resize(c.count(1), c.count(0));
        break;
    case 1:
        for (int f = 0; f < c.count(2); ++f) {
            const auto& te = c.triangle_edges(f);
            trip.emplace_back(f, te[0], 1);
            trip.emplace_back(f, te[1], -1);
            trip.emplace_back(f, te[2], 1);
        }
        d.resize(c.count(2), c.count(1));
        break;
    case 2:
        for (int t = 0; t < c.count(3); ++t)
            for (int i = 0; i < 4; ++i) trip.emplace_back(t, c.tet_faces(t)[i], c.tet_face_signs(t)[i]);
        d.resize(c.count(3), c.count(2));
        break;
    default: throw std::invalid_argument("coboundary degree must be 0, 1 or 2");
    }
    d.setFromTriplets(trip.begin(), trip.end());
    return d;
}

WhitneyElement whitney_element(const SimplicialComplex3& c, int tet) {
    const auto& v = c.tets()[tet];
    const auto& p = c.vertices();
    Eigen::Matrix3d j;
    j.col(0) = p[v[1]] - p[v[0]];
    j.col(1) = p[v[2]] - p[v[0]];
    j.col(2) = p[v[3]] - p[v[0]];
    WhitneyElement el;
    el.volume = j.determinant() / 6.0;
    const Eigen::Matrix3d jinv = j.inverse();
    for (int a = 1; a < 4; ++a) el.grad.col(a) = jinv.row(a - 1).transpose();
    el.grad.col(0) = -(el.grad.col(1) + el.grad.col(2) + el.grad.col(3));

    for (int e = 0; e < 6; ++e) {
        int a = SimplicialComplex3::kTetEdges[e][0], b = SimplicialComplex3::kTetEdges[e][1];
        if (v[a] > v[b]) std::swap(a, b);
        auto& m = el.edge[e];
        m.setZero();
        m.col(a) = el.grad.col(b);
        m.col(b) = -el.grad.col(a);
    }
    for (int i = 0; i < 4; ++i) {
        std::array<int, 3> l{};
        int n = 0;
        for (int q = 0; q < 4; ++q)
            if (q != i) l[n++] = q;
        std::sort(l.begin(), l.end(), [&](int x, int y) { return v[x] < v[y]; });
        const Eigen::Vector3d ga = el.grad.col(l[0]), gb = el.grad.col(l[1]), gc = el.grad.col(l[2]);
        auto& m = el.face[i];
        m.setZero();
        m.col(l[0]) = 2.0 * gb.cross(gc);
        m.col(l[1]) = 2.0 * gc.cross(ga);
        m.col(l[2]) = 2.0 * ga.cross(gb);
    }
    return el;
}

SpMat assemble_mass(const SimplicialComplex3& c, const MaterialField& mat, int k) {
    if (k < 0 || k > 3) throw std::invalid_argument("mass degree must be 0..3");
    if (mat.size() != c.count(3))
        throw MaterialError("material field has " + std::to_string(mat.size()) + " entries for " +
                            std::to_string(c.count(3)) + " tetrahedra");
    const double diam = c.diameter();
    const double min_volume = 1e-12 * diam * diam * diam;
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < c.count(3); ++t) {
        const WhitneyElement el = whitney_element(c, t);
        if (!(el.volume >= min_volume))
            throw GeometryError("degenerate tetrahedron " + std::to_string(t) + " (volume " +
                                std::to_string(el.volume) + ")");
        const Eigen::Matrix3d g = material_metric(k % 2 == 0 ? mat.mu[t] : mat.eps[t]);
        const double sqrt_det = std::sqrt(g.determinant());
        Eigen::Matrix4d q = Eigen::Matrix4d::Constant(el.volume / 20.0);
        q.diagonal().array() *= 2.0;
        const auto& v = c.tets()[t];
        auto pair_mass = [&](const Eigen::Matrix<double, 3, 4>& a, const Eigen::Matrix3d& w,
                             const Eigen::Matrix<double, 3, 4>& b) { return (a.transpose() * w * b).cwiseProduct(q).sum(); };
        switch (k) {
        case 0:
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) trip.emplace_back(v[i], v[j], sqrt_det * q(i, j));
            break;
        case 1: {
            const Eigen::Matrix3d w = g.inverse() * sqrt_det;
            const auto& ids = c.tet_edges(t);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) trip.emplace_back(ids[i], ids[j], pair_mass(el.edge[i], w, el.edge[j]));
            break;
        }
        case 2: {
            const Eigen::Matrix3d w = g / sqrt_det;
            const auto& ids = c.tet_faces(t);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) trip.emplace_back(ids[i], ids[j], pair_mass(el.face[i], w, el.face[j]));
            break;
        }
        case 3: trip.emplace_back(t, t, 1.0 / (el.volume * sqrt_det)); break;
        }
    }
    SpMat m(c.count(k), c.count(k));
    m.setFromTriplets(trip.begin(), trip.end());
    SpMat mt = m.transpose();
    return 0.5 * (m + mt);
}

GradedOperator assemble_graded(const SimplicialComplex3& c, const MaterialField& mat) {
    mat.validate();
    GradedOperator g;
    for (int k = 0; k < 4; ++k) g.n[k] = c.count(k);
    for (int k = 0; k < 3; ++k) g.d[k] = coboundary(c, k).cast<double>();
    for (int k = 0; k < 4; ++k) g.G[k] = assemble_mass(c, mat, k);
    for (int k = 0; k < 4; ++k) {
        g.interior_pos[k].assign(g.n[k], -1);
        g.boundary_pos[k].assign(g.n[k], -1);
        for (int i = 0; i < g.n[k]; ++i) {
            if (k < 3 && c.on_boundary(k, i)) {
                g.boundary_pos[k][i] = static_cast<int>(g.boundary[k].size());
                g.boundary[k].push_back(i);
            } else {
                g.interior_pos[k][i] = static_cast<int>(g.interior[k].size());
                g.interior[k].push_back(i);
            }
        }
    }
    auto solvers = std::make_shared<MassSolvers>();
    for (int k = 0; k < 4; ++k) {
        g.G_II[k] = g.block(g.G[k], k, true, k, true);
        if (g.G_II[k].rows() == 0) continue;
        solvers->interior[k].compute(g.G_II[k]);
        if (solvers->interior[k].info() != Eigen::Success)
            throw SolverError("interior mass matrix of degree " + std::to_string(k) + " is not positive definite");
    }
    g.solvers = std::move(solvers);
    return g;
}

Eigen::VectorXd GradedOperator::restrict_interior(int k, const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(interior[k].size());
    for (std::size_t i = 0; i < interior[k].size(); ++i) out[static_cast<Eigen::Index>(i)] = full[interior[k][i]];
    return out;
}

Eigen::VectorXd GradedOperator::extend_interior(int k, const Eigen::VectorXd& rel) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n[k]);
    for (std::size_t i = 0; i < interior[k].size(); ++i) out[interior[k][i]] = rel[static_cast<Eigen::Index>(i)];
    return out;
}

Eigen::VectorXd GradedOperator::restrict_boundary(int k, const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(boundary[k].size());
    for (std::size_t i = 0; i < boundary[k].size(); ++i) out[static_cast<Eigen::Index>(i)] = full[boundary[k][i]];
    return out;
}

Eigen::VectorXd GradedOperator::solve_interior_mass(int k, const Eigen::VectorXd& r) const {
    if (r.size() == 0) return r;
    const auto& s = solvers->interior[k];
    Eigen::VectorXd x = s.solve(r);
    // One refinement step keeps the relative residual near machine precision.
    const Eigen::VectorXd res = r - G_II[k] * x;
    x += s.solve(res);
    return x;
}

SpMat GradedOperator::block(const SpMat& m, int row_deg, bool row_interior, int col_deg, bool col_interior) const {
    const auto& rpos = row_interior ? interior_pos[row_deg] : boundary_pos[row_deg];
    const auto& cpos = col_interior ? interior_pos[col_deg] : boundary_pos[col_deg];
    const auto rn = (row_interior ? interior[row_deg] : boundary[row_deg]).size();
    const auto cn = (col_interior ? interior[col_deg] : boundary[col_deg]).size();
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < m.outerSize(); ++j) {
        if (cpos[j] < 0) continue;
        for (SpMat::InnerIterator it(m, j); it; ++it)
            if (rpos[it.row()] >= 0) trip.emplace_back(rpos[it.row()], cpos[j], it.value());
    }
    SpMat out(static_cast<Eigen::Index>(rn), static_cast<Eigen::Index>(cn));
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

CochainState CochainState::zeros(const GradedOperator& g, bool relative) {
    CochainState s;
    s.relative = relative;
    for (int k = 0; k < 4; ++k)
        s.w[k] = Eigen::VectorXd::Zero(relative ? static_cast<Eigen::Index>(g.interior[k].size()) : g.n[k]);
    return s;
}

Eigen::VectorXd codifferential(const GradedOperator& g, int k, const Eigen::VectorXd& omega) {
    if (k < 1 || k > 3) throw std::invalid_argument("codifferential degree must be 1..3");
    const Eigen::VectorXd r = g.d[k - 1].transpose() * (g.G[k] * omega);
    return g.extend_interior(k - 1, g.solve_interior_mass(k - 1, g.restrict_interior(k - 1, r)));
}

Eigen::VectorXd trace_t(const SimplicialComplex3& c, const CochainState& s, int k) {
    if (s.relative) throw ValidationError("tangential trace needs a full (non-relative) state");
    if (k < 0 || k > 2) throw std::invalid_argument("tangential trace degree must be 0..2");
    const auto& b = c.boundary_simplices(k);
    Eigen::VectorXd out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[static_cast<Eigen::Index>(i)] = s.w[k][b[i]];
    return out;
}

Eigen::VectorXd trace_n(const GradedOperator& g, const CochainState& s, int k) {
    if (k < 1 || k > 3) throw std::invalid_argument("normal trace degree must be 1..3");
    const Eigen::VectorXd omega = s.relative ? g.extend_interior(k, s.w[k]) : s.w[k];
    const Eigen::VectorXd r = g.d[k - 1].transpose() * (g.G[k] * omega);
    const Eigen::VectorXd delta = codifferential(g, k, omega);
    return g.restrict_boundary(k - 1, r - g.G[k - 1] * delta);
}

} // namespace mbetti
