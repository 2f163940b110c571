#include "mbetti/inverse/recover.hpp"

#include <algorithm>

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

namespace {

int steps_of(double length, double step) {
    const double x = length / step;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 || r < 1)
        throw DomainOfDependenceError("averaging horizon " + std::to_string(length) +
                                      " is not a positive multiple of the time step");
    return static_cast<int>(r);
}

template <class Task>
void run_parallel(int n_tasks, int threads, Task&& task) {
    threads = std::max(1, std::min(threads, n_tasks));
    if (threads == 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n_tasks; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string ladder_text(const std::vector<double>& ev) {
    std::ostringstream os;
    os.precision(3);
    os << "[";
    for (std::size_t i = 0; i < ev.size(); ++i) os << (i ? ", " : "") << ev[i];
    os << "]";
    return os.str();
}

double snap_down(double T, double step) { return std::floor(T / step + 1e-9) * step; }

} // namespace

std::vector<double> averaging_weights(const Averaging& avg, double step) {
    const int n = steps_of(avg.T, step);
    std::vector<double> w(n + 1, 1.0);
    if (avg.window == Window::cesaro) {
        w.front() = w.back() = 0.5;
    } else {
        for (int j = 0; j <= n; ++j) {
            const double x = 2.0 * j / n - 1.0;
            w[j] = std::cyl_bessel_i(0.0, avg.beta * std::sqrt(std::max(0.0, 1.0 - x * x)));
        }
    }
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    return w;
}

double projected_inner(BoundaryInnerProducts& bip, int f, int h, int k, const Averaging& avg) {
    const auto w = averaging_weights(avg, bip.dataset().grid.step);
    const auto row = bip.row(f, h, k);
    if (row.size() < w.size())
        throw DomainOfDependenceError("averaging horizon " + std::to_string(avg.T) + " exceeds the data horizon " +
                                      std::to_string(bip.horizon()));
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * row[j];
    return acc;
}

ProjectedGram gram_matrix(BoundaryInnerProducts& bip, const std::vector<int>& sources, int k, const Averaging& avg,
                          int threads) {
    if (sources.empty()) throw ValidationError("gram_matrix needs at least one source");
    const int n = static_cast<int>(sources.size());
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) pairs.emplace_back(a, b);
    // Warm the cache; one march yields both orderings of a pair.
    run_parallel(static_cast<int>(pairs.size()), threads, [&](int i) {
        const auto [a, b] = pairs[i];
        bip.row(std::min(sources[a], sources[b]), std::max(sources[a], sources[b]), k);
    });

    ProjectedGram g;
    g.degree = k;
    g.sources = sources;
    g.averaging = avg;
    Eigen::MatrixXd raw(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) raw(a, b) = projected_inner(bip, sources[a], sources[b], k, avg);
    const double scale = raw.cwiseAbs().maxCoeff();
    g.asymmetry = scale > 0.0 ? (raw - raw.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    g.P = 0.5 * (raw + raw.transpose());
    for (int a = 0; a < n; ++a) g.energies.push_back(bip.row(sources[a], sources[a], k).front());
    return g;
}

RankEstimate count_dimension(const ProjectedGram& g, double tau_rel, double min_gap, double energy_floor) {
    const int n = static_cast<int>(g.P.rows());
    RankEstimate r;
    double e_max = 0.0;
    for (double e : g.energies) e_max = std::max(e_max, e);
    if (e_max <= energy_floor) e_max = 0.0;
    r.threshold = tau_rel * e_max;
    r.gap_ratio = std::numeric_limits<double>::infinity();
    if (n == 0 || e_max <= 0.0) {
        r.eigenvalues.assign(n, 0.0);
        return r;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.P, Eigen::EigenvaluesOnly);
    for (int i = n - 1; i >= 0; --i) r.eigenvalues.push_back(es.eigenvalues()[i]);
    while (r.eigen_rank < n && r.eigenvalues[r.eigen_rank] >= r.threshold) ++r.eigen_rank;
    if (r.eigen_rank > 0 && r.eigen_rank < n) {
        const double next = std::abs(r.eigenvalues[r.eigen_rank]);
        r.gap_ratio = next > 0.0 ? r.eigenvalues[r.eigen_rank - 1] / next : std::numeric_limits<double>::infinity();
    }

    // Gram-Schmidt in the P inner product, taking the largest residual first.
    std::vector<int> kept;
    std::vector<char> used(n, 0);
    while (static_cast<int>(kept.size()) < n) {
        const int m = static_cast<int>(kept.size());
        Eigen::MatrixXd pss(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) pss(a, b) = g.P(kept[a], kept[b]);
        const auto ldlt = pss.ldlt();
        int best = -1;
        double best_res = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            double res = g.P(j, j);
            if (m > 0) {
                Eigen::VectorXd psj(m);
                for (int a = 0; a < m; ++a) psj[a] = g.P(kept[a], j);
                res -= psj.dot(ldlt.solve(psj));
            }
            if (res > best_res) best_res = res, best = j;
        }
        if (best_res < r.threshold) break;
        kept.push_back(best);
        used[best] = 1;
    }
    r.gram_schmidt_rank = static_cast<int>(kept.size());

    const std::string where = "degree " + std::to_string(g.degree) + ", " + std::to_string(n) + " sources, T = " +
                              std::to_string(g.averaging.T) + ": eigenvalues " + ladder_text(r.eigenvalues) +
                              ", threshold " + std::to_string(r.threshold);
    if (r.gram_schmidt_rank != r.eigen_rank)
        throw AmbiguousRankError("Gram-Schmidt rank " + std::to_string(r.gram_schmidt_rank) +
                                 " disagrees with eigenvalue rank " + std::to_string(r.eigen_rank) + " (" + where + ")");
    if (r.gap_ratio < min_gap)
        throw AmbiguousRankError("no " + std::to_string(min_gap) + "x spectral gap at the rank cut (" + where + ")");
    r.rank = r.eigen_rank;
    return r;
}

namespace {

struct RoundResult {
    bool valid = true;
    std::string error;
    std::vector<DegreeDiagnostics> diag;
};

// `scale_degrees` add their energies to the reference scale of the round-off floor.
RoundResult run_round(BoundaryInnerProducts& bip, const std::vector<int>& degrees,
                      const std::vector<int>& scale_degrees, int n_sources, double T, const RecoverSpec& spec) {
    RoundResult out;
    std::vector<int> sources(n_sources);
    for (int i = 0; i < n_sources; ++i) sources[i] = i;
    std::vector<ProjectedGram> grams;
    double e_all = 0.0;
    for (int k : degrees) {
        grams.push_back(gram_matrix(bip, sources, k, Averaging{T, spec.window, spec.beta}, spec.threads));
        for (double e : grams.back().energies) e_all = std::max(e_all, e);
    }
    for (int k : scale_degrees)
        if (std::find(degrees.begin(), degrees.end(), k) == degrees.end())
            for (int j : sources) e_all = std::max(e_all, bip.inner_product(j, j, k, 0.0, 0.0));
    for (const auto& g : grams) {
        const int k = g.degree;
        DegreeDiagnostics d;
        d.degree = k;
        d.n_sources = n_sources;
        d.T = T;
        d.asymmetry = g.asymmetry;
        try {
            d.estimate = count_dimension(g, spec.tau_rel, spec.min_gap,
                                         std::max(spec.energy_floor * e_all, spec.absolute_floor));
        } catch (const AmbiguousRankError& e) {
            out.valid = false;
            if (out.error.empty()) out.error = e.what();
            d.estimate.rank = -1;
        }
        out.diag.push_back(d);
    }
    return out;
}

bool same_counts(const RoundResult& a, const RoundResult& b) {
    if (!a.valid || !b.valid || a.diag.size() != b.diag.size()) return false;
    for (std::size_t i = 0; i < a.diag.size(); ++i)
        if (a.diag[i].estimate.rank != b.diag[i].estimate.rank) return false;
    return true;
}

nlohmann::json history_entry(const RoundResult& r) {
    nlohmann::json j;
    j["n_sources"] = r.diag.empty() ? 0 : r.diag.front().n_sources;
    j["T"] = r.diag.empty() ? 0.0 : r.diag.front().T;
    j["valid"] = r.valid;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& d : r.diag) counts[std::to_string(d.degree)] = d.estimate.rank;
    j["counts"] = counts;
    if (!r.valid) j["error"] = r.error;
    return j;
}

// Doubles the source count until two rounds agree; within a round the last two
// sweep values of T must agree.
void adaptive(BoundaryInnerProducts& bip, const std::vector<int>& degrees, const std::vector<int>& scale_degrees,
              const RecoverSpec& spec, BettiReport& rep) {
    const int available = std::min(bip.n_sources(), spec.max_sources);
    if (available < 1) throw DatasetError("dataset has no sources");
    std::vector<double> sweep = spec.T_sweep;
    const double step = bip.dataset().grid.step;
    if (sweep.empty()) sweep = {snap_down(2.0 * bip.horizon() / 3.0, step), bip.horizon()};

    RoundResult previous;
    bool have_previous = false;
    int n = std::min(std::max(1, spec.initial_sources), available);
    while (true) {
        std::vector<RoundResult> per_T;
        for (double T : sweep) {
            per_T.push_back(run_round(bip, degrees, scale_degrees, n, T, spec));
            rep.history.push_back(history_entry(per_T.back()));
        }
        RoundResult round = per_T.back();
        if (per_T.size() >= 2 && !same_counts(per_T[per_T.size() - 2], round)) {
            round.valid = false;
            if (round.error.empty()) round.error = "counts change between the last two averaging horizons";
        }
        rep.diagnostics = round.diag;
        rep.sources_used = n;
        rep.T_used = sweep.back();
        if (have_previous && round.valid && same_counts(previous, round)) {
            rep.converged = true;
            return;
        }
        if (n == available) {
            rep.converged = false;
            rep.failure = round.valid ? "source count did not stabilize before the dataset ran out (" +
                                            std::to_string(available) + " sources)"
                                      : round.error;
            return;
        }
        previous = round;
        have_previous = true;
        n = std::min(2 * n, available);
    }
}

void check_report(BettiReport& rep) {
    if (!rep.converged) return;
    if (rep.betti[0] != 1 || rep.betti[3] != 0) {
        rep.converged = false;
        rep.failure = "recovered beta_0 / beta_3 contradict a connected manifold with boundary";
        return;
    }
    rep.chi = rep.betti[0] - rep.betti[1] + rep.betti[2] - rep.betti[3];
    if (rep.chi_boundary != 2 * rep.chi) {
        rep.converged = false;
        rep.failure = "chi(dM) = " + std::to_string(rep.chi_boundary) + " differs from 2 chi(M) = " +
                      std::to_string(2 * rep.chi);
    }
}

} // namespace

BettiReport betti_from_dirac(BoundaryInnerProducts& bip, const RecoverSpec& spec) {
    if (bip.dataset().method != "complete-dirac")
        throw DatasetError("betti_from_dirac needs a complete-Dirac dataset, got " + bip.dataset().method);
    BettiReport rep;
    rep.method = "complete-dirac";
    rep.chi_boundary = bip.dataset().patch.euler_characteristic();
    adaptive(bip, {0, 1, 2, 3}, {}, spec, rep);
    if (rep.converged)
        for (const auto& d : rep.diagnostics) {
            rep.relative[d.degree] = d.estimate.rank;
            rep.betti[3 - d.degree] = d.estimate.rank;
        }
    check_report(rep);
    return rep;
}

int beta2_from_boundary(int beta1, const BoundaryPatch& boundary) {
    const int chi_b = boundary.euler_characteristic();
    if (chi_b % 2 != 0)
        throw ConsistencyError("boundary Euler characteristic " + std::to_string(chi_b) +
                               " is odd; not a closed orientable surface");
    const int beta2 = chi_b / 2 - 1 + beta1;
    if (beta2 < 0)
        throw ConsistencyError("beta_1 = " + std::to_string(beta1) + " and chi(dM) = " + std::to_string(chi_b) +
                               " give a negative beta_2");
    return beta2;
}

BettiReport beta1_physical(BoundaryInnerProducts& bip, const RecoverSpec& spec) {
    if (bip.dataset().method != "physical-maxwell")
        throw DatasetError("beta1_physical needs a physical-Maxwell dataset, got " + bip.dataset().method);
    BettiReport rep;
    rep.method = "physical-maxwell";
    rep.chi_boundary = bip.dataset().patch.euler_characteristic();
    adaptive(bip, {2}, {1}, spec, rep);
    if (rep.converged) {
        const int b1 = rep.diagnostics.front().estimate.rank;
        const int b2 = beta2_from_boundary(b1, bip.dataset().patch);
        rep.betti = {1, b1, b2, 0};
        rep.relative = {0, b2, b1, 1};
    }
    check_report(rep);
    return rep;
}

nlohmann::json BettiReport::to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["converged"] = converged;
    if (!failure.empty()) j["failure"] = failure;
    j["betti"] = betti;
    j["relative_betti"] = relative;
    j["chi"] = chi;
    j["chi_boundary"] = chi_boundary;
    j["sources_used"] = sources_used;
    j["T"] = T_used;
    nlohmann::json diag = nlohmann::json::array();
    for (const auto& d : diagnostics) {
        nlohmann::json e;
        e["degree"] = d.degree;
        e["n_sources"] = d.n_sources;
        e["T"] = d.T;
        e["rank"] = d.estimate.rank;
        e["gram_schmidt_rank"] = d.estimate.gram_schmidt_rank;
        e["eigen_rank"] = d.estimate.eigen_rank;
        e["eigenvalues"] = d.estimate.eigenvalues;
        e["threshold"] = d.estimate.threshold;
        e["gap_ratio"] = std::isfinite(d.estimate.gap_ratio) ? nlohmann::json(d.estimate.gap_ratio) : nlohmann::json("inf");
        e["asymmetry"] = d.asymmetry;
        diag.push_back(e);
    }
    j["degrees"] = diag;
    j["history"] = history;
    return j;
}

void BettiReport::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write " + path.string());
    out << to_json().dump(2) << "\n";
}

void BettiReport::write_ladders_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write " + path.string());
    out.precision(17);
    out << "degree,n_sources,T,index,eigenvalue,threshold\n";
    for (const auto& d : diagnostics)
        for (std::size_t i = 0; i < d.estimate.eigenvalues.size(); ++i)
            out << d.degree << ',' << d.n_sources << ',' << d.T << ',' << i << ',' << d.estimate.eigenvalues[i] << ','
                << d.estimate.threshold << '\n';
}

} // namespace mbetti
