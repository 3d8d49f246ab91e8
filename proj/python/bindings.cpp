#include "fermimon/config.hpp"
#include "fermimon/errors.hpp"
#include "fermimon/hubbard.hpp"
#include "fermimon/meanfield.hpp"
#include "fermimon/observables.hpp"
#include "fermimon/optics.hpp"
#include "fermimon/runner.hpp"
#include "fermimon/sme.hpp"
#include "fermimon/trajectory.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace fermimon;

namespace {

// (data, indices, indptr, shape) of a row-major sparse operator, i.e. CSR.
py::tuple csr(const SparseOperator& op) {
    auto m = op.matrix();
    m.makeCompressed();
    const auto nnz = static_cast<py::ssize_t>(m.nonZeros());
    const auto rows = static_cast<py::ssize_t>(m.rows());
    py::array_t<cplx> data(nnz);
    py::array_t<std::int64_t> indices(nnz);
    py::array_t<std::int64_t> indptr(rows + 1);
    std::copy(m.valuePtr(), m.valuePtr() + nnz, data.mutable_data());
    std::copy(m.innerIndexPtr(), m.innerIndexPtr() + nnz, indices.mutable_data());
    std::copy(m.outerIndexPtr(), m.outerIndexPtr() + rows + 1, indptr.mutable_data());
    return py::make_tuple(data, indices, indptr, py::make_tuple(rows, m.cols()));
}

py::array_t<double> table(const std::vector<std::vector<double>>& rows, std::size_t width) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(width)});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) v(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = rows[i][j];
    }
    return out;
}

py::dict record_dict(const TrajectoryRecord& r) {
    py::dict d;
    d["seed"] = r.seed;
    d["index"] = r.index;
    d["columns"] = r.columns;
    d["times"] = py::array_t<double>(static_cast<py::ssize_t>(r.times.size()), r.times.data());
    d["norm2"] = py::array_t<double>(static_cast<py::ssize_t>(r.norm2.size()), r.norm2.data());
    d["photocount"] = py::array_t<long>(static_cast<py::ssize_t>(r.photocount.size()), r.photocount.data());
    d["values"] = table(r.rows, r.columns.size());
    d["jump_times"] = r.jump_times;
    d["jump_channels"] = r.jump_channels;
    d["detected"] = r.detected;
    d["truncated"] = r.truncated;
    if (!r.purity.empty()) d["purity"] = r.purity;
    return d;
}

RunConfig config(const std::string& text) { return parse_config_string(text); }

std::shared_ptr<const FockBasis> sector(int sites, int n_up, int n_down) {
    return std::make_shared<const FockBasis>(sites, n_up, n_down);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quantum-jump simulation of lattice fermions under global light scattering";
    m.attr("__version__") = FERMIMON_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("sector_dimension", &FockBasis::dimension, "sites"_a, "n_up"_a, "n_down"_a);
    m.def(
        "basis_states",
        [](int sites, int n_up, int n_down) {
            const FockBasis b(sites, n_up, n_down);
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& s : b.states()) out.emplace_back(format_occupation(s.up, sites), format_occupation(s.down, sites));
            return out;
        },
        "sites"_a, "n_up"_a, "n_down"_a, "Occupation strings (up, down) in basis order, site 0 first.");

    m.def(
        "hubbard",
        [](int sites, int n_up, int n_down, double J, double U, const std::string& boundary) {
            return csr(build_hubbard(*sector(sites, n_up, n_down), {J, U, boundary_from_string(boundary)}));
        },
        "sites"_a, "n_up"_a, "n_down"_a, "J"_a = 1.0, "U"_a = 0.0, "boundary"_a = "open",
        "Sector Hamiltonian as CSR components (data, indices, indptr, shape).");

    m.def(
        "ground_state",
        [](int sites, int n_up, int n_down, double J, double U, const std::string& boundary) {
            const GroundState gs = ground_state(build_hubbard(*sector(sites, n_up, n_down), {J, U, boundary_from_string(boundary)}));
            return py::dict("energy"_a = gs.energy, "state"_a = gs.state.amplitudes(), "degeneracy"_a = gs.degeneracy,
                            "gap"_a = gs.gap);
        },
        "sites"_a, "n_up"_a, "n_down"_a, "J"_a = 1.0, "U"_a = 0.0, "boundary"_a = "open");

    m.def(
        "profile",
        [](const std::string& preset, int sites) { return diffraction_profile(geometry_preset(preset, sites)); },
        "preset"_a, "sites"_a, "Per-site scattering coefficients of a named geometry.");

    m.def(
        "jump_operator",
        [](int sites, int n_up, int n_down, const Profile& profile, const std::string& polarization, double gamma) {
            JumpChannel ch;
            ch.polarization = polarization_from_string(polarization);
            ch.gamma = gamma;
            return csr(build_jump_operator(*sector(sites, n_up, n_down), profile, ch));
        },
        "sites"_a, "n_up"_a, "n_down"_a, "profile"_a, "polarization"_a = "linear-x", "gamma"_a = 1.0);

    m.def("mode_partition", [](const Profile& profile) {
        std::vector<std::pair<cplx, std::vector<int>>> out;
        for (const auto& md : mode_partition(profile)) out.emplace_back(md.coefficient, md.sites);
        return out;
    }, "profile"_a);

    m.def("momentum_profile", &momentum_profile, "profile"_a);

    m.def(
        "structure_factor",
        [](int sites, int n_up, int n_down, const CVector& amplitudes, double q) {
            const FockBasis b(sites, n_up, n_down);
            return structure_factor(b, probabilities(StateVector(amplitudes)), q);
        },
        "sites"_a, "n_up"_a, "n_down"_a, "amplitudes"_a, "q"_a = kQ);

    m.def(
        "one_body_density",
        [](int sites, int n_up, int n_down, const CVector& amplitudes, const std::string& spin) {
            const FockBasis b(sites, n_up, n_down);
            return one_body_density(b, StateVector(amplitudes), spin == "down" ? Spin::Down : Spin::Up);
        },
        "sites"_a, "n_up"_a, "n_down"_a, "amplitudes"_a, "spin"_a = "up");

    m.def("min_efficiency", &min_efficiency, "J"_a, "gamma"_a, "atoms"_a);

    m.def(
        "normalize_config", [](const std::string& text) { return to_json(config(text)).dump(); }, "config"_a,
        "Validates a JSON configuration and returns it with every default filled in.");

    m.def(
        "run_trajectory",
        [](const std::string& text, std::uint64_t seed, std::size_t index) {
            const RunConfig c = config(text);
            TrajectoryRecord r;
            {
                py::gil_scoped_release release;
                r = run_trajectory(trajectory_problem(c), evolution_options(c), seed, index,
                                   c.channels.front().efficiency);
            }
            return record_dict(r);
        },
        "config"_a, "seed"_a, "index"_a = 0);

    m.def(
        "run_meanfield",
        [](const std::string& text, std::uint64_t seed, std::size_t index) {
            const RunConfig c = config(text);
            MeanFieldRecord r;
            {
                py::gil_scoped_release release;
                r = run_meanfield(meanfield_model(c), meanfield_options(c), seed, index);
            }
            py::dict d = record_dict(r.trace);
            d["k_times"] = r.k_times;
            d["k_snapshots"] = r.k_snapshots;
            d["pair_sums"] = r.pair_sums;
            d["max_pair_drift"] = r.max_pair_drift;
            d["closure_breakdown"] = r.closure_breakdown;
            return d;
        },
        "config"_a, "seed"_a, "index"_a = 0);

    m.def(
        "run",
        [](const std::string& text) {
            const RunConfig c = config(text);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(c);
            }
            return py::dict("directory"_a = r.directory, "files"_a = r.files, "emissions"_a = r.emissions);
        },
        "config"_a, "Runs the configured mode and writes its artifacts; returns the artifact listing.");

    m.def(
        "describe_geometry", [](const std::string& text) { return describe_geometry_csv(config(text)); }, "config"_a);
}
