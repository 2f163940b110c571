#include "mbetti/boundary/dataset.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mbetti/boundary/errors.hpp"

namespace mbetti {

int TimeGrid::index_of(double t) const {
    const double x = (t - start) / step;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 || r < 0 || r >= size)
        throw DatasetError("time " + std::to_string(t) + " is not a point of the time grid");
    return static_cast<int>(r);
}

bool TimeGrid::operator==(const TimeGrid& o) const {
    return size == o.size && std::abs(step - o.step) <= 1e-14 * std::abs(step) &&
           std::abs(start - o.start) <= 1e-12 * std::max(1.0, std::abs(start));
}

Eigen::VectorXd BoundarySource::sample(int degree, int i, int n_simplices) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_simplices);
    for (const auto& t : terms)
        if (t.degree == degree && t.value[i] != 0.0) out += t.value[i] * t.profile;
    return out;
}

Eigen::VectorXd BoundarySource::sample_rate(int degree, int i, int n_simplices) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_simplices);
    for (const auto& t : terms)
        if (t.degree == degree && t.rate[i] != 0.0) out += t.rate[i] * t.profile;
    return out;
}

bool BoundarySource::has_degree(int degree) const {
    for (const auto& t : terms)
        if (t.degree == degree) return true;
    return false;
}

bool BoundarySource::is_zero() const {
    for (const auto& t : terms) {
        if (t.profile.size() == 0 || t.profile.lpNorm<Eigen::Infinity>() == 0.0) continue;
        for (double v : t.value)
            if (v != 0.0) return false;
    }
    return true;
}

BoundarySource BoundarySource::operator+(const BoundarySource& other) const {
    if (!(grid == other.grid)) throw DatasetError("cannot add sources on different time grids");
    BoundarySource out = *this;
    out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
    out.tau = std::max(tau, other.tau);
    return out;
}

BoundarySource BoundarySource::scaled(double c) const {
    BoundarySource out = *this;
    for (auto& t : out.terms) t.profile *= c;
    return out;
}

void ResponseDataset::validate() const {
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const auto& en = entries[e];
        if (!(en.source.grid == grid) || !(en.record.grid == grid))
            throw DatasetError("entry " + std::to_string(e) + " does not share the dataset time grid");
        for (const auto& t : en.source.terms) {
            if (t.degree < 0 || t.degree > 2 || t.profile.size() != patch.count(t.degree))
                throw DatasetError("entry " + std::to_string(e) + " has a malformed source term");
            if (static_cast<int>(t.value.size()) != grid.size || static_cast<int>(t.rate.size()) != grid.size)
                throw DatasetError("entry " + std::to_string(e) + " has a source term of the wrong length");
            for (Eigen::Index i = 0; i < t.profile.size(); ++i)
                if (t.profile[i] != 0.0 && !patch.is_inner(t.degree, static_cast<int>(i)))
                    throw DatasetError("entry " + std::to_string(e) + " has a degree-" + std::to_string(t.degree) +
                                       " source on boundary simplex " + std::to_string(i) + " outside Gamma");
        }
        for (int k = 1; k <= 3; ++k) {
            const auto& m = en.record.normal[k];
            if (m.size() == 0) continue;
            if (m.rows() != static_cast<Eigen::Index>(patch.support(k - 1).size()) || m.cols() != grid.size)
                throw DatasetError("entry " + std::to_string(e) + " has a record of the wrong shape (degree " +
                                   std::to_string(k) + ")");
        }
    }
}

namespace {

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DatasetError("dataset payload is truncated");
}

} // namespace

void ResponseDataset::save(const std::filesystem::path& path) const {
    validate();
    const std::filesystem::path payload = path.string() + ".bin";
    nlohmann::json header;
    header["format"] = "mbetti-response-dataset";
    header["version"] = 1;
    header["fingerprint"] = fingerprint;
    header["method"] = method;
    header["integrator"] = integrator;
    header["tau"] = tau;
    header["grid"] = {{"start", grid.start}, {"step", grid.step}, {"size", grid.size}};
    header["patch"] = patch.to_json();
    header["payload"] = payload.filename().string();
    nlohmann::json jentries = nlohmann::json::array();
    for (const auto& en : entries) {
        nlohmann::json je;
        nlohmann::json jterms = nlohmann::json::array();
        for (const auto& t : en.source.terms)
            jterms.push_back({{"degree", t.degree},
                              {"profile", std::vector<double>(t.profile.data(), t.profile.data() + t.profile.size())}});
        je["terms"] = jterms;
        je["tau"] = en.source.tau;
        je["bump_center"] = en.source.bump_center;
        je["bump_half_width"] = en.source.bump_half_width;
        je["seed"] = en.source.seed;
        std::vector<int> degrees;
        for (int k = 1; k <= 3; ++k)
            if (en.record.has_degree(k)) degrees.push_back(k);
        je["record_degrees"] = degrees;
        jentries.push_back(je);
    }
    header["entries"] = jentries;

    std::ofstream hout(path);
    if (!hout) throw DatasetError("cannot write " + path.string());
    hout << header.dump(1) << "\n";

    std::ofstream bout(payload, std::ios::binary);
    if (!bout) throw DatasetError("cannot write " + payload.string());
    for (const auto& en : entries) {
        for (const auto& t : en.source.terms) {
            write_doubles(bout, t.value.data(), t.value.size());
            write_doubles(bout, t.rate.data(), t.rate.size());
        }
        for (int k = 1; k <= 3; ++k)
            if (en.record.has_degree(k))
                write_doubles(bout, en.record.normal[k].data(), static_cast<std::size_t>(en.record.normal[k].size()));
    }
}

ResponseDataset ResponseDataset::load(const std::filesystem::path& path) {
    std::ifstream hin(path);
    if (!hin) throw DatasetError("cannot open " + path.string());
    ResponseDataset ds;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hin);
        if (header.at("format").get<std::string>() != "mbetti-response-dataset")
            throw DatasetError(path.string() + " is not a response dataset");
        ds.fingerprint = header.at("fingerprint").get<std::string>();
        ds.method = header.at("method").get<std::string>();
        ds.integrator = header.at("integrator").get<std::string>();
        ds.tau = header.at("tau").get<double>();
        const auto& g = header.at("grid");
        ds.grid = TimeGrid{g.at("start").get<double>(), g.at("step").get<double>(), g.at("size").get<int>()};
        ds.patch = BoundaryPatch::from_json(header.at("patch"));
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("malformed dataset header: ") + e.what());
    }

    std::ifstream bin(path.parent_path() / header.at("payload").get<std::string>(), std::ios::binary);
    if (!bin) throw DatasetError("cannot open dataset payload for " + path.string());
    const auto n = static_cast<std::size_t>(ds.grid.size);
    for (const auto& je : header.at("entries")) {
        DatasetEntry en;
        en.source.grid = ds.grid;
        en.record.grid = ds.grid;
        en.source.tau = je.at("tau").get<double>();
        en.source.bump_center = je.at("bump_center").get<double>();
        en.source.bump_half_width = je.at("bump_half_width").get<double>();
        en.source.seed = je.at("seed").get<unsigned long long>();
        for (const auto& jt : je.at("terms")) {
            SourceTerm t;
            t.degree = jt.at("degree").get<int>();
            const auto prof = jt.at("profile").get<std::vector<double>>();
            t.profile = Eigen::Map<const Eigen::VectorXd>(prof.data(), static_cast<Eigen::Index>(prof.size()));
            t.value.resize(n);
            t.rate.resize(n);
            read_doubles(bin, t.value.data(), n);
            read_doubles(bin, t.rate.data(), n);
            en.source.terms.push_back(std::move(t));
        }
        for (int k : je.at("record_degrees").get<std::vector<int>>()) {
            if (k < 1 || k > 3) throw DatasetError("record degree out of range");
            auto& m = en.record.normal[k];
            m.resize(static_cast<Eigen::Index>(ds.patch.support(k - 1).size()), ds.grid.size);
            read_doubles(bin, m.data(), static_cast<std::size_t>(m.size()));
        }
        ds.entries.push_back(std::move(en));
    }
    ds.validate();
    return ds;
}

} // namespace mbetti
