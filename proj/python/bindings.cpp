#include <memory>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mbetti/app/scenario.hpp"
#include "mbetti/boundary/errors.hpp"
#include "mbetti/homology.hpp"

namespace py = pybind11;
using namespace mbetti;

namespace {

using DatasetPtr = std::shared_ptr<ResponseDataset>;

HomologyMode mode_of(const std::string& m) {
    if (m == "absolute") return HomologyMode::absolute;
    if (m == "relative") return HomologyMode::relative;
    throw ValidationError("mode must be 'absolute' or 'relative'");
}

RecoverSpec recover_options(int initial_sources, int threads) {
    RecoverSpec r;
    r.initial_sources = initial_sources;
    r.threads = threads;
    return r;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Betti numbers of simplicial 3-manifolds from boundary data of the Maxwell/Dirac system";

    static py::exception<Error> error(m, "MbettiError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (e.kind() + ": " + e.what()).c_str());
        }
    });

    py::class_<SimplicialComplex3>(m, "Complex")
        .def("count", &SimplicialComplex3::count, py::arg("k"))
        .def("select_gamma",
             [](const SimplicialComplex3& c, double fraction, int seed) {
                 return select_gamma(c, fraction >= 1.0 ? GammaSelector::all() : GammaSelector::patch(fraction, seed));
             },
             py::arg("fraction"), py::arg("seed") = 0)
        .def("save", [](const SimplicialComplex3& c, const std::filesystem::path& p) { save_complex(c, p); })
        .def_property_readonly("euler", [](const SimplicialComplex3& c) { return euler(c); })
        .def_property_readonly("boundary_euler", [](const SimplicialComplex3& c) { return boundary_euler(c); });

    m.def("single_tet", &build_single_tet);
    m.def("ball", [](int refinement) { return build_ball(refinement); }, py::arg("refinement") = 1);
    m.def("solid_torus", &build_solid_torus, py::arg("segments") = 4, py::arg("refinement") = 0);
    m.def("tunneled_box", [](int k, int resolution) { return build_tunneled_box(k, resolution); }, py::arg("tunnels"),
          py::arg("resolution") = 1);
    m.def("load_mesh", &load_complex, py::arg("path"));

    m.def("betti", [](const SimplicialComplex3& c, const std::string& mode) { return betti(c, mode_of(mode)); },
          py::arg("complex"), py::arg("mode") = "absolute", "Exact rational homology oracle.");

    py::class_<MaterialField>(m, "Materials")
        .def_static("identity", &MaterialField::identity, py::arg("n_tets"))
        .def_static("random", &MaterialField::random, py::arg("n_tets"), py::arg("condition") = 10.0,
                    py::arg("seed") = 1);

    py::class_<DiracSystem>(m, "DiracSystem")
        .def(py::init(&assemble_dirac), py::arg("complex"), py::arg("materials"))
        .def_property_readonly("size", &DiracSystem::size)
        .def("spectral_gap", [](const DiracSystem& s) { return spectral_gap(s); })
        .def("kernel_dims", [](const DiracSystem& s) { return harmonic_kernel(s).dims; },
             "Dimensions of the Dirichlet harmonic fields per degree.");

    py::class_<ResponseDataset, DatasetPtr>(m, "Dataset")
        .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<ResponseDataset>(ResponseDataset::load(p)); })
        .def("save", &ResponseDataset::save, py::arg("path"))
        .def_property_readonly("n_sources", [](const ResponseDataset& d) { return static_cast<int>(d.entries.size()); })
        .def_readonly("method", &ResponseDataset::method)
        .def_property_readonly("dt", [](const ResponseDataset& d) { return d.grid.step; })
        .def_readonly("tau", &ResponseDataset::tau);

    m.def(
        "simulate",
        [](const SimplicialComplex3& c, const MaterialField& mat, double T, int n_sources, double dt, double tau,
           const std::string& method, std::uint64_t seed, int threads) {
            DatasetSpec spec;
            spec.source = SourceSpec{tau, dt, T + tau};
            spec.n_sources = n_sources;
            spec.seed = seed;
            spec.threads = threads;
            if (method == "physical-maxwell") {
                spec.method = DatasetMethod::physical_maxwell;
                spec.source.degrees = {false, true, false};
            } else if (method != "complete-dirac") {
                throw ValidationError("method must be 'complete-dirac' or 'physical-maxwell'");
            }
            py::gil_scoped_release release;
            return std::make_shared<ResponseDataset>(simulate_dataset(c, mat, spec));
        },
        py::arg("complex"), py::arg("materials"), py::arg("T"), py::arg("n_sources") = 8, py::arg("dt") = 1.0 / 16,
        py::arg("tau") = 4.0, py::arg("method") = "complete-dirac", py::arg("seed") = 1, py::arg("threads") = 1,
        "Forward simulation; records normal traces on Gamma over [-tau, T].");

    py::class_<BoundaryInnerProducts>(m, "BoundaryInnerProducts")
        .def(py::init<std::shared_ptr<const ResponseDataset>>(), py::arg("dataset"))
        .def_property_readonly("horizon", &BoundaryInnerProducts::horizon)
        .def("row", &BoundaryInnerProducts::row, py::arg("f"), py::arg("h"), py::arg("k"),
             "I^k_{f,h}(0, t) for t = 0, dt, .., horizon.")
        .def("inner_product", &BoundaryInnerProducts::inner_product, py::arg("f"), py::arg("h"), py::arg("k"),
             py::arg("s"), py::arg("t"));

    m.def(
        "_betti_from_dirac",
        [](BoundaryInnerProducts& bip, int initial_sources, int threads) {
            return betti_from_dirac(bip, recover_options(initial_sources, threads)).to_json().dump();
        },
        py::arg("bip"), py::arg("initial_sources") = 4, py::arg("threads") = 1);
    m.def(
        "_beta1_physical",
        [](BoundaryInnerProducts& bip, int initial_sources, int threads) {
            return beta1_physical(bip, recover_options(initial_sources, threads)).to_json().dump();
        },
        py::arg("bip"), py::arg("initial_sources") = 4, py::arg("threads") = 1);
    m.def("beta2_from_boundary", [](int beta1, const SimplicialComplex3& c) { return beta2_from_boundary(beta1, c.boundary_patch()); },
          py::arg("beta1"), py::arg("complex"));

    m.def(
        "_run_scenario",
        [](const std::string& scenario_json, const std::filesystem::path& out, int threads) {
            RunOptions opt;
            opt.out = out;
            opt.threads = threads;
            return run_scenario(Scenario::from_json(nlohmann::json::parse(scenario_json)), opt).comparison.dump();
        },
        py::arg("scenario_json"), py::arg("out"), py::arg("threads") = 1);
    m.def(
        "_verify_scenario",
        [](const std::string& scenario_json, const std::filesystem::path& out) {
            RunOptions opt;
            opt.out = out;
            return checklist_json(verify_scenario(Scenario::from_json(nlohmann::json::parse(scenario_json)), opt)).dump();
        },
        py::arg("scenario_json"), py::arg("out"));
}
