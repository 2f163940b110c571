#include "mbetti/dirac.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "mbetti/boundary/errors.hpp"
#include "mbetti/homology.hpp"

namespace mbetti {

DiracSystem assemble_dirac(const SimplicialComplex3& c, const MaterialField& mat) {
    DiracSystem sys;
    sys.ops = assemble_graded(c, mat);
    const auto& g = sys.ops;
    for (int k = 0; k < 4; ++k) {
        sys.offset[k + 1] = sys.offset[k] + static_cast<int>(g.interior[k].size());
        sys.full_offset[k + 1] = sys.full_offset[k] + g.n[k];
    }

    std::vector<Eigen::Triplet<double>> tg, tk, ta;
    auto add = [](std::vector<Eigen::Triplet<double>>& out, const SpMat& m, int r0, int c0) {
        for (int j = 0; j < m.outerSize(); ++j)
            for (SpMat::InnerIterator it(m, j); it; ++it) out.emplace_back(r0 + it.row(), c0 + j, it.value());
    };
    for (int k = 0; k < 4; ++k) add(tg, g.G_II[k], sys.offset[k], sys.offset[k]);
    for (int k = 1; k < 4; ++k) {
        const SpMat gd = g.G[k] * g.d[k - 1];
        const SpMat gd_t = gd.transpose();
        add(ta, gd, sys.full_offset[k], sys.full_offset[k - 1]);
        add(ta, -gd_t, sys.full_offset[k - 1], sys.full_offset[k]);
        const SpMat b = g.block(gd, k, true, k - 1, true);
        const SpMat b_t = b.transpose();
        add(tk, b, sys.offset[k], sys.offset[k - 1]);
        add(tk, -b_t, sys.offset[k - 1], sys.offset[k]);
    }
    sys.G.resize(sys.size(), sys.size());
    sys.G.setFromTriplets(tg.begin(), tg.end());
    sys.K.resize(sys.size(), sys.size());
    sys.K.setFromTriplets(tk.begin(), tk.end());
    sys.A_full.resize(sys.full_offset[4], sys.full_offset[4]);
    sys.A_full.setFromTriplets(ta.begin(), ta.end());
    return sys;
}

Eigen::VectorXd DiracSystem::pack(const CochainState& s) const {
    Eigen::VectorXd x(size());
    for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd part = s.relative ? s.w[k] : ops.restrict_interior(k, s.w[k]);
        x.segment(offset[k], offset[k + 1] - offset[k]) = part;
    }
    return x;
}

CochainState DiracSystem::unpack(const Eigen::VectorXd& x) const {
    CochainState s;
    s.relative = true;
    for (int k = 0; k < 4; ++k) s.w[k] = x.segment(offset[k], offset[k + 1] - offset[k]);
    return s;
}

Eigen::VectorXd DiracSystem::apply(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd r = K * x;
    Eigen::VectorXd out(size());
    for (int k = 0; k < 4; ++k) {
        const int n = offset[k + 1] - offset[k];
        out.segment(offset[k], n) = ops.solve_interior_mass(k, r.segment(offset[k], n));
    }
    return out;
}

CochainState DiracSystem::apply(const CochainState& s) const { return unpack(apply(pack(s))); }

void EigenLadder::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << "degree,index,eigenvalue,kernel\n";
    out.precision(17);
    for (int k = 0; k < 4; ++k)
        for (Eigen::Index i = 0; i < values[k].size(); ++i)
            out << k << "," << i << "," << values[k][i] << "," << (i < kernel_dims[k] ? 1 : 0) << "\n";
}

namespace {

// Degree-k block of G(-D^2) on interior DOFs, dense.
Eigen::MatrixXd laplace_block(const GradedOperator& g, int k) {
    const int n = static_cast<int>(g.interior[k].size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    if (k < 3) {
        const SpMat d = g.block(g.d[k], k + 1, true, k, true);
        const SpMat gd = g.G_II[k + 1] * d;
        l += Eigen::MatrixXd(SpMat(d.transpose()) * gd);
    }
    if (k > 0) {
        // G_k d G_{k-1}^{-1} d^T G_k
        const SpMat d = g.block(g.d[k - 1], k, true, k - 1, true);
        const Eigen::MatrixXd gd = Eigen::MatrixXd(g.G_II[k] * d);
        Eigen::MatrixXd y(gd.cols(), gd.rows());
        const Eigen::MatrixXd gdt = gd.transpose();
        for (Eigen::Index j = 0; j < gdt.cols(); ++j) y.col(j) = g.solve_interior_mass(k - 1, gdt.col(j));
        l += gd * y;
    }
    return 0.5 * (l + l.transpose());
}

std::string ladder_text(const EigenLadder& lad) {
    std::ostringstream os;
    os.precision(3);
    for (int k = 0; k < 4; ++k) {
        os << " degree " << k << ":";
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(lad.values[k].size(), 6); ++i) os << " " << lad.values[k][i];
    }
    return os.str();
}

} // namespace

HarmonicKernel harmonic_kernel(const DiracSystem& sys, double tol, double min_gap_ratio) {
    const auto& g = sys.ops;
    HarmonicKernel hk;
    std::array<Eigen::MatrixXd, 4> vecs;
    double largest = 0.0;
    for (int k = 0; k < 4; ++k) {
        const int n = static_cast<int>(g.interior[k].size());
        if (n == 0) {
            hk.ladder.values[k].resize(0);
            continue;
        }
        const Eigen::MatrixXd l = laplace_block(g, k);
        const Eigen::MatrixXd m(g.G_II[k]);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(l, m);
        if (es.info() != Eigen::Success) throw SolverError("eigensolve failed in degree " + std::to_string(k));
        hk.ladder.values[k] = es.eigenvalues();
        vecs[k] = es.eigenvectors();
        largest = std::max(largest, hk.ladder.values[k].maxCoeff());
    }
    hk.ladder.threshold = tol * largest;
    hk.ladder.gap_ratio = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        const auto& v = hk.ladder.values[k];
        int m = 0;
        while (m < v.size() && v[m] <= hk.ladder.threshold) ++m;
        hk.ladder.kernel_dims[k] = m;
        if (m > 0 && m < v.size()) {
            const double lo = std::max(std::abs(v[m - 1]), std::numeric_limits<double>::min());
            hk.ladder.gap_ratio = std::min(hk.ladder.gap_ratio, v[m] / lo);
        }
    }
    if (hk.ladder.gap_ratio < min_gap_ratio)
        throw AmbiguousRankError("no spectral gap separates the harmonic kernel (ratio " +
                                 std::to_string(hk.ladder.gap_ratio) + ");" + ladder_text(hk.ladder));
    hk.dims = hk.ladder.kernel_dims;
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < hk.dims[k]; ++j) {
            CochainState s = CochainState::zeros(g, true);
            s.w[k] = vecs[k].col(j);
            hk.basis.push_back(std::move(s));
        }
    return hk;
}

double spectral_gap(const DiracSystem& sys) {
    const HarmonicKernel hk = harmonic_kernel(sys);
    double gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        const auto& v = hk.ladder.values[k];
        if (hk.dims[k] < v.size()) gap = std::min(gap, std::sqrt(v[hk.dims[k]]));
    }
    return gap;
}

std::array<int, 4> hodge_kernel_check(const SimplicialComplex3& c, const MaterialField& mat) {
    const auto dims = harmonic_kernel(assemble_dirac(c, mat)).dims;
    const auto b = betti(c, HomologyMode::relative);
    if (dims != b) {
        std::ostringstream os;
        os << "harmonic kernel dimensions (" << dims[0] << "," << dims[1] << "," << dims[2] << "," << dims[3]
           << ") differ from relative Betti numbers (" << b[0] << "," << b[1] << "," << b[2] << "," << b[3] << ")";
        throw ConsistencyError(os.str());
    }
    return dims;
}

} // namespace mbetti
