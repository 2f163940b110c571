#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "mbetti/boundary/dataset.hpp"

namespace mbetti {

/// Forcing of the lattice wave equation
///   I(j+2, n+1) - I(j+1, n) - I(j+1, n+2) + I(j, n+1) = dt^2 F(j, n)
/// (s index j, t index n), stored as F(j, n) = sum_i t_part_i[n] * s_part_i[j].
/// F(j, n) approximates (d_s^2 - d_t^2) I at (j+1, n+1).
struct SeparableRhs {
    struct Term {
        std::vector<double> t_part;
        std::vector<double> s_part;
    };
    TimeGrid grid;
    std::vector<Term> terms;

    double at(int js, int jt) const;
    /// F(s_j, t_jt) for j = 0 .. n-1.
    void row(int jt, int n, double* out) const;
    bool is_zero() const { return terms.empty(); }
};

/// Forcing for I^k of the pair (f, h) = (entries[f], entries[h]) from sources
/// and recorded normal traces only. Time derivatives are the step operators of
/// the implicit midpoint rule, so for records produced by ForwardSolver the
/// lattice equation holds exactly. Missing records are read as zero for
/// physical-Maxwell datasets and rejected otherwise.
SeparableRhs assemble_rhs(const ResponseDataset& ds, int f, int h, int k);

/// I^k_{f,h}(s, t) = (w^{f,k}(t), w^{h,k}(s)) on the square [grid.start, t_max]^2.
struct InnerProductGrid {
    int degree = 0;
    int f = 0, h = 0;
    TimeGrid axis;          // shared by s (rows) and t (columns)
    Eigen::MatrixXd values; // values(js, jt)

    double at(double s, double t) const;
    void write_csv(const std::filesystem::path& path) const;
};

/// Marches the lattice equation in t from zero data on the first two t rows,
/// with I = 0 on s = grid.start. Returns the square
/// [grid.start, t_max]^2; throws DomainOfDependenceError if the data do not
/// cover its domain of dependence.
InnerProductGrid wave_solve(const SeparableRhs& rhs, double t_max);

/// I(0, t) and I(s, 0) for t, s = 0, step, .., t_max (one march).
struct PairRows {
    double step = 0.0;
    std::vector<double> s_zero; // I(0, t_j)
    std::vector<double> t_zero; // I(s_j, 0)
};
PairRows wave_solve_rows(const SeparableRhs& rhs, double t_max);

/// Largest t_max accepted by wave_solve_rows / wave_solve for this time grid.
double rows_horizon(const TimeGrid& grid);
double square_horizon(const TimeGrid& grid);

/// Cached boundary reconstruction of I^k for all source pairs of one dataset.
/// Thread safe; each cache slot is written once.
class BoundaryInnerProducts {
public:
    explicit BoundaryInnerProducts(std::shared_ptr<const ResponseDataset> ds);

    const ResponseDataset& dataset() const { return *ds_; }
    int n_sources() const { return static_cast<int>(ds_->entries.size()); }
    double horizon() const { return rows_horizon(ds_->grid); }

    /// I^k_{f,h}(0, t_j) for t_j in [0, horizon()].
    std::vector<double> row(int f, int h, int k);
    /// I^k_{f,h}(s, t) at lattice points s, t >= 0; the pair rows serve s = 0 or
    /// t = 0 up to horizon(), other points come from grid().
    double inner_product(int f, int h, int k, double s, double t);
    /// Full grid over [-tau, square_horizon()]^2.
    const InnerProductGrid& grid(int f, int h, int k);

private:
    using Key = std::tuple<int, int, int>;
    const PairRows& pair_rows(int a, int b, int k);

    std::shared_ptr<const ResponseDataset> ds_;
    std::mutex mutex_;
    std::map<Key, std::unique_ptr<PairRows>> rows_;
    std::map<Key, std::unique_ptr<InnerProductGrid>> grids_;
};

} // namespace mbetti
