#include "mbetti/forward.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

double bump_value(double t, double center, double half_width) {
    const double x = (t - center) / half_width;
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - x * x));
}

double bump_rate(double t, double center, double half_width) {
    const double x = (t - center) / half_width;
    if (std::abs(x) >= 1.0) return 0.0;
    const double q = 1.0 - x * x;
    return std::exp(-1.0 / q) * (-2.0 * x / (q * q)) / half_width;
}

TimeGrid SourceSpec::grid() const {
    if (!(dt > 0.0) || !(tau > 0.0) || !(t_end > 0.0)) throw ValidationError("time parameters must be positive");
    const double steps = tau / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
        throw ValidationError("tau must be an integer multiple of the time step");
    const int size = static_cast<int>(std::llround((t_end + tau) / dt)) + 1;
    return TimeGrid{-tau, dt, size};
}

namespace {

// Euclidean projection of a Gamma-supported 1-cochain onto ker d_boundary,
// keeping the support on inner edges.
Eigen::VectorXd closed_part(const BoundaryPatch& patch, const Eigen::VectorXd& r) {
    const auto& inner = patch.inner(1);
    const SpMat& d1 = patch.coboundary(1);
    SpMat select(patch.count(1), static_cast<Eigen::Index>(inner.size()));
    std::vector<Eigen::Triplet<double>> sel;
    for (std::size_t j = 0; j < inner.size(); ++j) sel.emplace_back(inner[j], static_cast<int>(j), 1.0);
    select.setFromTriplets(sel.begin(), sel.end());
    const SpMat C = d1 * select;
    const SpMat CCt = C * C.transpose();
    Eigen::VectorXd x = select.transpose() * r;
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(CCt);
    cg.setTolerance(1e-14);
    for (int pass = 0; pass < 3; ++pass) {
        const Eigen::VectorXd c = C * x;
        if (c.norm() <= 1e-13 * x.norm()) break;
        x -= C.transpose() * cg.solve(c);
    }
    if (x.norm() <= 1e-8 * r.norm())
        throw ValidationError("Gamma supports no nonzero closed 1-cochains");
    if ((C * x).norm() > 1e-12 * x.norm()) throw ValidationError("closed projection of the source did not converge");
    return select * x;
}

} // namespace

BoundarySource make_source(const BoundaryPatch& patch, std::uint64_t seed, const SourceSpec& spec) {
    BoundarySource src;
    src.grid = spec.grid();
    src.tau = spec.tau;
    src.seed = seed;
    const double margin = spec.margin >= 0.0 ? spec.margin : spec.tau / 8.0;
    src.bump_center = -spec.tau / 2.0;
    src.bump_half_width = spec.tau / 2.0 - margin;
    if (!(src.bump_half_width > 0.0)) throw ValidationError("bump margin leaves no support");

    std::vector<double> value(src.grid.size), rate(src.grid.size);
    int inside = 0;
    for (int i = 0; i < src.grid.size; ++i) {
        const double t = src.grid.time(i);
        value[i] = bump_value(t, src.bump_center, src.bump_half_width);
        rate[i] = bump_rate(t, src.bump_center, src.bump_half_width);
        if (value[i] > 0.0) ++inside;
    }
    if (inside < 16)
        throw ResolutionError("time step " + std::to_string(spec.dt) + " resolves the source bump with only " +
                              std::to_string(inside) + " samples (at least 16 required)");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 3; ++k) {
        if (!spec.degrees[k] || patch.inner(k).empty()) continue;
        SourceTerm term;
        term.degree = k;
        term.profile = Eigen::VectorXd::Zero(patch.count(k));
        for (int i : patch.inner(k)) term.profile[i] = normal(rng);
        if (k == 1 && spec.closed) term.profile = closed_part(patch, term.profile);
        term.profile.normalize();
        term.value = value;
        term.rate = rate;
        src.terms.push_back(std::move(term));
    }
    if (src.terms.empty()) throw ValidationError("Gamma has no inner simplices in the requested source degrees");
    return src;
}

BoundarySource physical_source(const BoundaryPatch& patch, const BoundarySource& h) {
    BoundarySource f = h;
    f.terms.clear();
    const double dt = h.grid.step;
    const SpMat d1 = patch.coboundary(1);
    for (const auto& t : h.terms) {
        if (t.degree != 1) throw ValidationError("physical sources are built from degree-1 data only");
        f.terms.push_back(t);
        SourceTerm integral;
        integral.degree = 2;
        integral.profile = -(d1 * t.profile);
        integral.value.assign(t.value.size(), 0.0);
        for (std::size_t i = 1; i < t.value.size(); ++i)
            integral.value[i] = integral.value[i - 1] + 0.5 * dt * (t.value[i - 1] + t.value[i]);
        integral.rate = t.value;
        f.terms.push_back(std::move(integral));
    }
    return f;
}

struct ForwardSolver::Impl {
    DiracSystem sys;
    BoundaryPatch patch;
    SpMat G_II, A_II, G_IB, A_IB, G_BI, G_BB, A_BI, A_BB, M_minus;
    Eigen::SparseLU<SpMat> cayley;
};

ForwardSolver::ForwardSolver(const SimplicialComplex3& c, const DiracSystem& sys, double dt) : dt_(dt) {
    if (!(dt > 0.0)) throw ValidationError("time step must be positive");
    auto impl = std::make_shared<Impl>();
    impl->sys = sys;
    impl->patch = c.boundary_patch();
    const auto& ops = sys.ops;
    n_int_ = sys.size();
    for (int k = 0; k < 3; ++k) b_offset_[k + 1] = b_offset_[k] + static_cast<int>(ops.boundary[k].size());
    n_bnd_ = b_offset_[3];

    // Full index -> (is_interior, packed position).
    const int n_full = sys.full_offset[4];
    std::vector<int> pos(n_full);
    std::vector<char> interior(n_full);
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < ops.n[k]; ++i) {
            const int gi = sys.full_offset[k] + i;
            interior[gi] = ops.interior_pos[k][i] >= 0;
            pos[gi] = interior[gi] ? sys.offset[k] + ops.interior_pos[k][i] : b_offset_[k] + ops.boundary_pos[k][i];
        }
    std::vector<Eigen::Triplet<double>> tg;
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < ops.G[k].outerSize(); ++j)
            for (SpMat::InnerIterator it(ops.G[k], j); it; ++it)
                tg.emplace_back(sys.full_offset[k] + it.row(), sys.full_offset[k] + j, it.value());
    SpMat g_full(n_full, n_full);
    g_full.setFromTriplets(tg.begin(), tg.end());

    auto split = [&](const SpMat& m, SpMat& ii, SpMat& ib, SpMat& bi, SpMat& bb) {
        std::vector<Eigen::Triplet<double>> t_ii, t_ib, t_bi, t_bb;
        for (int j = 0; j < m.outerSize(); ++j)
            for (SpMat::InnerIterator it(m, j); it; ++it) {
                const int r = static_cast<int>(it.row());
                auto& dst = interior[r] ? (interior[j] ? t_ii : t_ib) : (interior[j] ? t_bi : t_bb);
                dst.emplace_back(pos[r], pos[j], it.value());
            }
        ii.resize(n_int_, n_int_);
        ii.setFromTriplets(t_ii.begin(), t_ii.end());
        ib.resize(n_int_, n_bnd_);
        ib.setFromTriplets(t_ib.begin(), t_ib.end());
        bi.resize(n_bnd_, n_int_);
        bi.setFromTriplets(t_bi.begin(), t_bi.end());
        bb.resize(n_bnd_, n_bnd_);
        bb.setFromTriplets(t_bb.begin(), t_bb.end());
    };
    split(g_full, impl->G_II, impl->G_IB, impl->G_BI, impl->G_BB);
    split(sys.A_full, impl->A_II, impl->A_IB, impl->A_BI, impl->A_BB);

    if (n_int_ > 0) {
        SpMat m_plus = impl->G_II + 0.5 * dt * impl->A_II;
        impl->M_minus = impl->G_II - 0.5 * dt * impl->A_II;
        m_plus.makeCompressed();
        impl->cayley.compute(m_plus);
        if (impl->cayley.info() != Eigen::Success) throw SolverError("factorization of the Cayley operator failed");
    }
    impl_ = std::move(impl);
}

const DiracSystem& ForwardSolver::system() const { return impl_->sys; }
const BoundaryPatch& ForwardSolver::patch() const { return impl_->patch; }

Eigen::VectorXd ForwardSolver::boundary_vector(const BoundarySource& f, int i, bool rate) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_bnd_);
    for (const auto& t : f.terms) {
        const double a = rate ? t.rate[i] : t.value[i];
        if (a == 0.0) continue;
        if (t.profile.size() != b_offset_[t.degree + 1] - b_offset_[t.degree])
            throw ValidationError("source profile does not match the boundary of the mesh");
        out.segment(b_offset_[t.degree], t.profile.size()) += a * t.profile;
    }
    return out;
}

CochainState ForwardSolver::assemble_state(const Eigen::VectorXd& v, const Eigen::VectorXd& fb) const {
    const auto& sys = impl_->sys;
    const auto& ops = sys.ops;
    CochainState s;
    s.relative = false;
    for (int k = 0; k < 4; ++k) {
        s.w[k] = ops.extend_interior(k, v.segment(sys.offset[k], sys.offset[k + 1] - sys.offset[k]));
        for (std::size_t i = 0; i < ops.boundary[k].size(); ++i)
            s.w[k][ops.boundary[k][i]] = fb[b_offset_[k] + static_cast<int>(i)];
    }
    return s;
}

CochainState ForwardSolver::lift(const BoundarySource& f, int i) const {
    return assemble_state(Eigen::VectorXd::Zero(n_int_), boundary_vector(f, i, false));
}

Trajectory ForwardSolver::evolve(const BoundarySource& f, std::array<bool, 4> record, bool keep_states) const {
    const Impl& m = *impl_;
    const auto& sys = m.sys;
    Trajectory tr;
    tr.grid = f.grid;
    tr.record.grid = f.grid;
    if (std::abs(f.grid.step - dt_) > 1e-12 * dt_) throw ValidationError("source grid step differs from the solver step");
    const int n_steps = f.grid.size;
    for (int k = 1; k <= 3; ++k)
        if (record[k]) tr.record.normal[k] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.patch.support(k - 1).size()), n_steps);

    const bool any_record = record[1] || record[2] || record[3];
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_int_);
    Eigen::VectorXd fb = boundary_vector(f, 0, false);
    double max_norm = 0.0, max_leak = 0.0;
    for (int n = 0; n < n_steps; ++n) {
        if (n_int_ > 0) {
            double total = fb.squaredNorm(), leak = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int len = sys.offset[k + 1] - sys.offset[k];
                const auto seg = v.segment(sys.offset[k], len);
                const double e = seg.dot(sys.ops.G_II[k] * seg);
                total += e;
                if (k == 0 || k == 3) leak += std::sqrt(e);
            }
            max_norm = std::max(max_norm, std::sqrt(total));
            max_leak = std::max(max_leak, leak);
        }
        if (keep_states) tr.states.push_back(assemble_state(v, fb));
        const bool last = n + 1 == n_steps;
        if (last && !any_record) break;
        // The source is held constant over the step past the grid end.
        Eigen::VectorXd fb1 = last ? fb : boundary_vector(f, n + 1, false);
        Eigen::VectorXd v1 = v;
        if (n_int_ > 0) {
            const Eigen::VectorXd rhs = m.M_minus * v - m.G_IB * (fb1 - fb) - 0.5 * dt_ * (m.A_IB * (fb1 + fb));
            v1 = m.cayley.solve(rhs);
            if (m.cayley.info() != Eigen::Success) throw SolverError("Cayley solve failed at step " + std::to_string(n));
        }
        if (any_record) {
            const Eigen::VectorXd rho = (m.G_BI * (v1 - v) + m.G_BB * (fb1 - fb)) / dt_ +
                                        0.5 * (m.A_BI * (v1 + v) + m.A_BB * (fb1 + fb));
            for (int k = 1; k <= 3; ++k) {
                if (!record[k]) continue;
                const auto& sup = m.patch.support(k - 1);
                for (std::size_t r = 0; r < sup.size(); ++r)
                    tr.record.normal[k](static_cast<Eigen::Index>(r), n) = -rho[b_offset_[k - 1] + sup[r]];
            }
        }
        v = std::move(v1);
        fb = std::move(fb1);
    }
    tr.leakage = max_norm > 0.0 ? max_leak / max_norm : 0.0;
    return tr;
}

Eigen::VectorXd ForwardSolver::step_free(const Eigen::VectorXd& v0, int steps) const {
    Eigen::VectorXd v = v0;
    for (int i = 0; i < steps; ++i) v = impl_->cayley.solve(impl_->M_minus * v);
    return v;
}

BoundaryRecord response(const ForwardSolver& solver, const BoundarySource& f) { return solver.evolve(f).record; }

BoundaryRecord physical_response(const ForwardSolver& solver, const BoundarySource& h, double* leakage) {
    const BoundarySource f = physical_source(solver.patch(), h);
    Trajectory tr = solver.evolve(f, {false, false, true, false});
    if (tr.leakage > 1e-9)
        std::cerr << "warning: physical sector leakage " << tr.leakage << " exceeds 1e-9 (integrator error)\n";
    if (leakage) *leakage = tr.leakage;
    return tr.record;
}

namespace {

struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 1099511628211ull;
        }
    }
    template <class T>
    void value(const T& v) {
        bytes(&v, sizeof(T));
    }
};

std::uint64_t source_seed(std::uint64_t seed, int j) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(j)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

} // namespace

std::string fingerprint(const SimplicialComplex3& c, const MaterialField& mat) {
    Fnv f;
    for (const auto& p : c.vertices()) f.bytes(p.data(), 3 * sizeof(double));
    for (const auto& t : c.tets()) f.bytes(t.data(), 4 * sizeof(int));
    for (int g : c.gamma()) f.value(g);
    for (int t = 0; t < mat.size(); ++t) {
        f.bytes(mat.eps[t].data(), 9 * sizeof(double));
        f.bytes(mat.mu[t].data(), 9 * sizeof(double));
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << f.h;
    return os.str();
}

ResponseDataset simulate_dataset(const SimplicialComplex3& c, const MaterialField& mat, const DatasetSpec& spec) {
    if (spec.n_sources < 1) throw ValidationError("at least one source is required");
    const DiracSystem sys = assemble_dirac(c, mat);
    const ForwardSolver solver(c, sys, spec.source.dt);
    ResponseDataset ds;
    ds.patch = solver.patch();
    ds.grid = spec.source.grid();
    ds.tau = spec.source.tau;
    ds.fingerprint = fingerprint(c, mat);
    ds.method = spec.method == DatasetMethod::complete_dirac ? "complete-dirac" : "physical-maxwell";
    ds.entries.resize(spec.n_sources);

    auto run = [&](int j) {
        const std::uint64_t seed = source_seed(spec.seed, j);
        DatasetEntry& en = ds.entries[j];
        if (spec.method == DatasetMethod::complete_dirac) {
            en.source = make_source(ds.patch, seed, spec.source);
            en.record = solver.evolve(en.source).record;
        } else {
            SourceSpec hs = spec.source;
            hs.degrees = {false, true, false};
            hs.closed = true;
            const BoundarySource h = make_source(ds.patch, seed, hs);
            en.source = physical_source(ds.patch, h);
            en.record = physical_response(solver, h);
        }
    };
    const int threads = std::max(1, std::min(spec.threads, spec.n_sources));
    if (threads == 1) {
        for (int j = 0; j < spec.n_sources; ++j) run(j);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (int j = w; j < spec.n_sources; j += threads) run(j);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    ds.validate();
    return ds;
}

} // namespace mbetti
