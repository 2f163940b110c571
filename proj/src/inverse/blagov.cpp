#include "mbetti/inverse/blagov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

double SeparableRhs::at(int js, int jt) const {
    double acc = 0.0;
    for (const auto& t : terms) acc += t.t_part[jt] * t.s_part[js];
    return acc;
}

void SeparableRhs::row(int jt, int n, double* out) const {
    std::fill(out, out + n, 0.0);
    for (const auto& t : terms) {
        const double a = t.t_part[jt];
        if (a == 0.0) continue;
        const double* b = t.s_part.data();
        for (int j = 0; j < n; ++j) out[j] += a * b[j];
    }
}

namespace {

struct PairTerm {
    std::vector<double> x_part; // function of the time of X
    std::vector<double> y_part; // function of the time of Y
};

class RhsBuilder {
public:
    explicit RhsBuilder(const ResponseDataset& ds) : ds_(ds), patch_(ds.patch) {}

    // rho^j = -n^{j+1} of entry e, one row per simplex of support(j).
    const Eigen::MatrixXd* rho(int e, int j) const {
        const auto& rec = ds_.entries[e].record;
        if (!rec.has_degree(j + 1)) {
            if (ds_.method == "physical-maxwell") return nullptr;
            throw DatasetError("entry " + std::to_string(e) + " has no degree-" + std::to_string(j + 1) + " record");
        }
        return &rec.normal[j + 1];
    }

    // <vec, rho^j(entry e)> per step; vec must vanish off support(j).
    std::vector<double> pair(const Eigen::VectorXd& vec, int e, int j) const {
        const int n = ds_.grid.size;
        std::vector<double> out(n, 0.0);
        const auto& sup = patch_.support(j);
        double off = 0.0;
        for (Eigen::Index i = 0; i < vec.size(); ++i)
            if (patch_.support_position(j, static_cast<int>(i)) < 0) off = std::max(off, std::abs(vec[i]));
        if (off > 0.0)
            throw DatasetError("degree-" + std::to_string(j) + " pairing vector is not supported in Gamma");
        const Eigen::MatrixXd* r = rho(e, j);
        if (!r) return out;
        for (std::size_t p = 0; p < sup.size(); ++p) {
            const double c = vec[sup[p]];
            if (c == 0.0) continue;
            for (int t = 0; t < n; ++t) out[t] -= c * (*r)(static_cast<Eigen::Index>(p), t);
        }
        return out;
    }

    Eigen::VectorXd d_boundary(const Eigen::VectorXd& x, int j) const {
        return patch_.coboundary(j) * x;
    }

    // Step operators on grid sequences, output at n centred at n + 1; x is constant past the grid.
    std::vector<double> mean2(const std::vector<double>& x) const {
        const int n = static_cast<int>(x.size());
        std::vector<double> out(n, 0.0);
        for (int i = 0; i + 1 < n; ++i) out[i] = 0.25 * (x[i] + 2 * x[i + 1] + x[std::min(i + 2, n - 1)]);
        return out;
    }
    std::vector<double> mean_diff(const std::vector<double>& x) const {
        const int n = static_cast<int>(x.size());
        std::vector<double> out(n, 0.0);
        for (int i = 0; i + 1 < n; ++i) out[i] = (x[std::min(i + 2, n - 1)] - x[i]) / (2 * ds_.grid.step);
        return out;
    }
    // Half-step sequences (records): average and difference of neighbours.
    std::vector<double> mean(const std::vector<double>& r) const {
        std::vector<double> out(r.size(), 0.0);
        for (std::size_t i = 0; i + 1 < r.size(); ++i) out[i] = 0.5 * (r[i] + r[i + 1]);
        return out;
    }
    std::vector<double> diff(const std::vector<double>& r) const {
        std::vector<double> out(r.size(), 0.0);
        for (std::size_t i = 0; i + 1 < r.size(); ++i) out[i] = (r[i + 1] - r[i]) / ds_.grid.step;
        return out;
    }

    // Terms of P_{X -> Y}(a, b) for degree k.
    std::vector<PairTerm> terms(int x, int y, int k) const {
        std::vector<PairTerm> out;
        auto push = [&](std::vector<double> xp, std::vector<double> yp, double sign) {
            bool nz = false;
            for (double v : yp) nz = nz || v != 0.0;
            if (!nz) return;
            if (sign != 1.0)
                for (double& v : xp) v *= sign;
            out.push_back({std::move(xp), std::move(yp)});
        };
        for (const auto& t : ds_.entries[x].source.terms) {
            if (t.degree == k) {
                if (k + 1 <= 2) push(mean2(t.value), mean(pair(d_boundary(t.profile, k), y, k + 1)), 1.0);
                push(mean2(t.value), diff(pair(t.profile, y, k)), 1.0);
            } else if (t.degree == k - 1) {
                push(mean_diff(t.value), mean(pair(t.profile, y, k - 1)), -1.0);
            } else if (t.degree == k - 2 && k - 2 + 1 <= 2) {
                push(mean2(t.value), mean(pair(d_boundary(t.profile, k - 2), y, k - 1)), -1.0);
            }
        }
        return out;
    }

private:
    const ResponseDataset& ds_;
    const BoundaryPatch& patch_;
};

void check_rhs(const SeparableRhs& rhs) {
    for (const auto& t : rhs.terms)
        if (static_cast<int>(t.t_part.size()) != rhs.grid.size || static_cast<int>(t.s_part.size()) != rhs.grid.size)
            throw DatasetError("right-hand side term does not match its time grid");
}

// (E_s - E_t)(E_s E_t - 1) I = dt^2 F: leapfrog at unit Courant number with the
// forcing of the diamond centred at (j, m). Rows 0 and 1 vanish (sources are off
// there); row m is valid for s indices 0 .. J - m.
template <class Visit>
void march(const SeparableRhs& rhs, int n_last, Visit&& visit) {
    const int size = rhs.grid.size;
    const int last = size - 1;
    const double h2 = rhs.grid.step * rhs.grid.step;
    std::vector<double> prev(size, 0.0), cur(size, 0.0), next(size, 0.0), f(size, 0.0);
    visit(0, cur);
    if (n_last < 1) return;
    visit(1, cur);
    for (int m = 1; m < n_last; ++m) {
        const int valid = last - m - 1;
        rhs.row(m - 1, valid, f.data());
        next[0] = 0.0;
        for (int j = 1; j <= valid; ++j) next[j] = cur[j + 1] + cur[j - 1] - prev[j] - h2 * f[j - 1];
        for (int j = valid + 1; j < size; ++j) next[j] = 0.0;
        std::swap(prev, cur);
        std::swap(cur, next);
        visit(m + 1, cur);
    }
}

int steps_of(double length, double step, const char* what) {
    const double x = length / step;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 || r < 0)
        throw DomainOfDependenceError(std::string(what) + " is not a nonnegative multiple of the time step");
    return static_cast<int>(r);
}

} // namespace

SeparableRhs assemble_rhs(const ResponseDataset& ds, int f, int h, int k) {
    const int n = static_cast<int>(ds.entries.size());
    if (f < 0 || f >= n || h < 0 || h >= n) throw DatasetError("source index out of range");
    if (k < 0 || k > 3) throw DatasetError("degree must be 0..3");
    if (ds.grid.size < 4) throw DatasetError("time grid too short");
    for (int e : {f, h}) {
        const auto& en = ds.entries[e];
        if (!(en.source.grid == ds.grid) || !(en.record.grid == ds.grid))
            throw DatasetError("entry " + std::to_string(e) + " does not share the dataset time grid");
        for (const auto& t : en.source.terms)
            if (t.value[0] != 0.0 || t.value[1] != 0.0)
                throw DatasetError("entry " + std::to_string(e) + " has a source active on the first two grid points");
    }

    RhsBuilder b(ds);
    SeparableRhs rhs;
    rhs.grid = ds.grid;
    // F(s, t) = P_{f->h}(t, s) - P_{h->f}(s, t)
    for (auto& p : b.terms(f, h, k)) rhs.terms.push_back({std::move(p.x_part), std::move(p.y_part)});
    for (auto& p : b.terms(h, f, k)) {
        for (double& v : p.y_part) v = -v;
        rhs.terms.push_back({std::move(p.y_part), std::move(p.x_part)});
    }
    return rhs;
}

double rows_horizon(const TimeGrid& grid) {
    const int j0 = grid.index_of(0.0);
    return std::max(0, grid.size - 1 - 2 * j0) * grid.step;
}

double square_horizon(const TimeGrid& grid) { return grid.time((grid.size - 1) / 2); }

InnerProductGrid wave_solve(const SeparableRhs& rhs, double t_max) {
    check_rhs(rhs);
    const int m = steps_of(t_max - rhs.grid.start, rhs.grid.step, "t_max");
    if (2 * m > rhs.grid.size - 1)
        throw DomainOfDependenceError("data end at t = " + std::to_string(rhs.grid.end()) +
                                      "; the square up to " + std::to_string(t_max) + " needs data up to " +
                                      std::to_string(rhs.grid.start + 2 * m * rhs.grid.step));
    InnerProductGrid g;
    g.axis = TimeGrid{rhs.grid.start, rhs.grid.step, m + 1};
    g.values = Eigen::MatrixXd::Zero(m + 1, m + 1);
    march(rhs, m, [&](int n, const std::vector<double>& row) {
        for (int j = 0; j <= m; ++j) g.values(j, n) = row[j];
    });
    return g;
}

PairRows wave_solve_rows(const SeparableRhs& rhs, double t_max) {
    check_rhs(rhs);
    const int j0 = rhs.grid.index_of(0.0);
    const int nt = steps_of(t_max, rhs.grid.step, "t_max");
    if (2 * j0 + nt > rhs.grid.size - 1)
        throw DomainOfDependenceError("rows up to t = " + std::to_string(t_max) + " need data up to " +
                                      std::to_string(rhs.grid.time(2 * j0 + nt)) + ", data end at " +
                                      std::to_string(rhs.grid.end()));
    PairRows out;
    out.step = rhs.grid.step;
    out.s_zero.resize(nt + 1);
    out.t_zero.resize(nt + 1);
    march(rhs, j0 + nt, [&](int n, const std::vector<double>& row) {
        if (n >= j0) out.s_zero[n - j0] = row[j0];
        if (n == j0)
            for (int i = 0; i <= nt; ++i) out.t_zero[i] = row[j0 + i];
    });
    return out;
}

double InnerProductGrid::at(double s, double t) const {
    auto idx = [&](double x) {
        try {
            return axis.index_of(x);
        } catch (const DatasetError&) {
            throw DomainOfDependenceError("(" + std::to_string(s) + ", " + std::to_string(t) +
                                          ") is outside the reconstructed square");
        }
    };
    return values(idx(s), idx(t));
}

void InnerProductGrid::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write " + path.string());
    out.precision(17);
    out << "s,t,value\n";
    for (int j = 0; j < values.rows(); ++j)
        for (int n = 0; n < values.cols(); ++n) out << axis.time(j) << ',' << axis.time(n) << ',' << values(j, n) << '\n';
}

BoundaryInnerProducts::BoundaryInnerProducts(std::shared_ptr<const ResponseDataset> ds) : ds_(std::move(ds)) {
    if (!ds_) throw DatasetError("null dataset");
    ds_->validate();
}

const PairRows& BoundaryInnerProducts::pair_rows(int a, int b, int k) {
    const Key key{a, b, k};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = rows_.find(key);
        if (it != rows_.end()) return *it->second;
    }
    auto rows = std::make_unique<PairRows>(wave_solve_rows(assemble_rhs(*ds_, a, b, k), horizon()));
    std::lock_guard<std::mutex> lock(mutex_);
    return *rows_.try_emplace(key, std::move(rows)).first->second;
}

std::vector<double> BoundaryInnerProducts::row(int f, int h, int k) {
    return f <= h ? pair_rows(f, h, k).s_zero : pair_rows(h, f, k).t_zero;
}

const InnerProductGrid& BoundaryInnerProducts::grid(int f, int h, int k) {
    const Key key{f, h, k};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = grids_.find(key);
        if (it != grids_.end()) return *it->second;
    }
    auto g = std::make_unique<InnerProductGrid>(wave_solve(assemble_rhs(*ds_, f, h, k), square_horizon(ds_->grid)));
    g->degree = k;
    g->f = f;
    g->h = h;
    std::lock_guard<std::mutex> lock(mutex_);
    return *grids_.try_emplace(key, std::move(g)).first->second;
}

double BoundaryInnerProducts::inner_product(int f, int h, int k, double s, double t) {
    if (s < 0 || t < 0) throw DomainOfDependenceError("inner products are served for s, t >= 0");
    const double step = ds_->grid.step;
    if (s == 0.0 || t == 0.0) {
        const double x = s == 0.0 ? t : s;
        const int i = steps_of(x, step, "query time");
        const auto r = s == 0.0 ? row(f, h, k) : row(h, f, k);
        if (i >= static_cast<int>(r.size()))
            throw DomainOfDependenceError("query time " + std::to_string(x) + " exceeds the horizon " +
                                          std::to_string(horizon()));
        return r[i];
    }
    return grid(f, h, k).at(s, t);
}

} // namespace mbetti
