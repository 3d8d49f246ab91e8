#include "doctest.h"

#include "fermimon/config.hpp"
#include "fermimon/errors.hpp"
#include "fermimon/io.hpp"
#include "fermimon/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fermimon;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string preset(const std::string& name) { return std::string(FERMIMON_PRESET_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fermimon_test_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config(const fs::path& out) {
    RunConfig c = parse_config(json{
        {"mode", "trajectory"},
        {"lattice", {{"sites", 4}, {"n_up", 2}, {"n_down", 2}, {"boundary", "open"}}},
        {"channel", {{"polarization", "linear-y"}, {"gamma", 1.0}}},
        {"evolution", {{"t_max", 1.0}, {"snapshot_dt", 0.1}}},
        {"observables", {"structure_factor", "staggered_magnetization", "photocount_rate"}},
        {"ensemble", {{"trajectories", 3}, {"seed", 5}}},
    });
    c.output.directory = out.string();
    return c;
}

}  // namespace

TEST_CASE("figure presets parse") {
    const RunConfig f2 = parse_config_file(preset("fig2"));
    CHECK(f2.mode == RunMode::Trajectory);
    CHECK(f2.lattice == LatticeConfig{8, 4, 4, Boundary::Open});
    CHECK(f2.U == 0.0);
    CHECK(f2.geometry.preset == "diffraction-minimum");
    REQUIRE(f2.channels.size() == 1);
    CHECK(f2.channels[0].polarization == Polarization::LinearY);
    CHECK(f2.channels[0].gamma == 1.0);
    CHECK(f2.ensemble.trajectories >= 50);

    const RunConfig f3 = parse_config_file(preset("fig3"));
    CHECK(f3.U == 20.0);
    CHECK(f3.channels[0].gamma == 0.1);
    CHECK(f3.channels[0].polarization == Polarization::CircularL);
    CHECK(f3.geometry.preset == "odd-sites");

    const RunConfig f4 = parse_config_file(preset("fig4"));
    CHECK(f4.lattice == LatticeConfig{16, 8, 0, Boundary::Periodic});
    const RunConfig f4p = parse_config_file(preset("fig4_period3"));
    CHECK(f4p.geometry.preset == "period-3");

    const RunConfig f5 = parse_config_file(preset("fig5"));
    CHECK(f5.mode == RunMode::MeanField);
    CHECK(f5.lattice == LatticeConfig{100, 50, 0, Boundary::Antiperiodic});
    CHECK(f5.channels[0].gamma == 0.05);
    CHECK(f5.evolution.t_max == 20.0);
    CHECK(f5.evolution.meanfield_dt <= 1e-3);

    for (const char* name : {"fig2", "fig3", "fig4", "fig4_period3", "fig5"}) {
        const RunConfig c = parse_config_file(preset(name));
        CHECK(parse_config(to_json(c)) == c);
    }
}

TEST_CASE("defaults and round trip") {
    const RunConfig d = parse_config(json::object());
    RunConfig expect;
    expect.observables = default_observables(expect.mode, expect.lattice.boundary);
    CHECK(d == expect);
    CHECK(d.evolution.integrator == "krylov");
    CHECK(parse_config(to_json(d)) == d);

    const RunConfig c = parse_config(json{
        {"mode", "sme"},
        {"lattice", {{"sites", 3}, {"n_up", 1}, {"n_down", 1}, {"boundary", "periodic"}}},
        {"geometry", {{"probe", {{"kind", "traveling"}, {"kz_d", 0.4}, {"phase", 0.1}}}}},
        {"channel",
         json::array({{{"polarization", "custom"},
                       {"gamma", 0.2},
                       {"efficiency", 0.5},
                       {"custom_profile", {1.0, json::array({0.0, 1.0}), -0.5}},
                       {"spin_weights", {1.0, json::array({0.0, -1.0})}}},
                      {{"polarization", "linear-x"},
                       {"gamma", 0.3},
                       {"efficiency", 0.5},
                       {"include_bonds", true},
                       {"bond_profile", {0.1, 0.2, 0.3}}}})},
        {"evolution", {{"max_jumps", 12}, {"sme_dt", 1e-3}, {"integrator", "dormand-prince"}}},
        {"initial_state", {{"kind", "fock"}, {"up", "100"}, {"down", "010"}}},
    });
    CHECK_FALSE(c.geometry.preset.has_value());
    CHECK(c.geometry.probe.kz_d == 0.4);
    REQUIRE(c.channels.size() == 2);
    REQUIRE(c.channels[0].custom_profile.has_value());
    CHECK((*c.channels[0].custom_profile)[1] == cplx(0.0, 1.0));
    CHECK(c.channels[0].spin_weights.second == cplx(0.0, -1.0));
    CHECK(c.evolution.max_jumps == 12);
    CHECK(parse_config(to_json(c)) == c);
    CHECK(parse_config_string(to_json(c).dump()) == c);
}

TEST_CASE("configuration errors") {
    auto bad = [](const json& j) { CHECK_THROWS_AS(parse_config(j), ConfigError); };
    bad(json{{"lattice", {{"sitez", 4}}}});
    bad(json{{"unknown", 1}});
    bad(json{{"lattice", {{"sites", "eight"}}}});
    bad(json{{"lattice", {{"sites", 40}, {"n_up", 2}, {"n_down", 2}}}});
    bad(json{{"lattice", {{"sites", 4}, {"n_up", 5}, {"n_down", 0}}}});
    bad(json{{"mode", "fly"}});
    bad(json{{"hubbard", {{"J", 0.0}}}});
    bad(json{{"geometry", {{"preset", "nowhere"}}}});
    bad(json{{"channel", json::array()}});
    bad(json{{"channel", {{"gamma", -1.0}}}});
    bad(json{{"channel", {{"efficiency", 1.5}}}});
    bad(json{{"channel", {{"polarization", "diagonal"}}}});
    bad(json{{"channel", json::array({{{"efficiency", 0.5}}, {{"efficiency", 0.4}}})}});
    bad(json{{"evolution", {{"snapshot_dt", 0.0}}}});
    bad(json{{"evolution", {{"integrator", "euler"}}}});
    bad(json{{"evolution", {{"max_jumps", 1.5}}}});
    bad(json{{"observables", {"momentum_occupation"}}});
    bad(json{{"observables", {"no_such_thing"}}});
    bad(json{{"initial_state", {{"kind", "fock"}, {"up", "1100"}, {"down", "1100"}}}});
    bad(json{{"initial_state", {{"kind", "fock"}, {"up", "11000000"}, {"down", "11110000"}}}});
    bad(json{{"initial_state", {{"kind", "mystery"}}}});
    bad(json{{"ensemble", {{"trajectories", 0}}}});
    bad(json{{"ensemble", {{"seed", -3}}}});
    bad(json{{"mode", "meanfield"}, {"lattice", {{"sites", 8}, {"n_up", 4}, {"n_down", 4}, {"boundary", "periodic"}}}});
    bad(json{{"mode", "meanfield"}, {"lattice", {{"sites", 8}, {"n_up", 4}, {"n_down", 0}, {"boundary", "open"}}}});
    CHECK_THROWS_AS(parse_config_string("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/config.json"), ConfigError);

    const RunConfig mf = parse_config(
        json{{"mode", "meanfield"}, {"lattice", {{"sites", 1000}, {"n_up", 500}, {"n_down", 0}, {"boundary", "antiperiodic"}}}});
    CHECK(mf.lattice.sites == 1000);
}

TEST_CASE("initial states") {
    RunConfig c = small_config(scratch("init"));
    c.initial_state = {"fock", "1010", "0101", ""};
    const Model m = build_model(c);
    const StateVector f = initial_state(c, m);
    const auto k = *m.basis->index({parse_occupation("1010"), parse_occupation("0101")});
    CHECK(std::abs(f.amplitudes()(static_cast<Eigen::Index>(k)) - 1.0) < 1e-15);

    const fs::path file = fs::temp_directory_path() / "fermimon_test_amplitudes.json";
    json amps = json::array();
    for (std::size_t i = 0; i < m.basis->size(); ++i) amps.push_back(i % 2 ? json(2.0) : json::array({0.0, 1.0}));
    std::ofstream(file) << json{{"amplitudes", amps}}.dump();
    c.initial_state = {"file", "", "", file.string()};
    const StateVector g = initial_state(c, m);
    CHECK(g.norm2() == doctest::Approx(1.0));
    CHECK(std::abs(g.amplitudes()(1)) == doctest::Approx(2.0 * std::abs(g.amplitudes()(0))));

    std::ofstream(file) << json{{"amplitudes", {1.0, 2.0}}}.dump();
    CHECK_THROWS_AS(initial_state(c, m), ConfigError);
    fs::remove(file);
}

TEST_CASE("number formatting and quantiles") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0}) CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(0.5) == "0.5");
    CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
    CHECK(std::isnan(quantile({}, 0.5)));
}

TEST_CASE("trajectory runs are reproducible and complete") {
    const fs::path a = scratch("run_a");
    const fs::path b = scratch("run_b");
    RunConfig c = small_config(a);
    c.output.emit_plot_data = true;
    const RunConfig ca = c;
    const RunResult ra = run(c);
    c.output.directory = b.string();
    run(c);
    for (const char* f : {"traj_00000.csv", "traj_00001.csv", "traj_00002.csv", "summary.csv", "plot_data.csv"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "config.json"));
    CHECK(parse_config(json::parse(slurp(a / "config.json"))) == ca);
    const json manifest = json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["master_seed"] == 5);
    CHECK(manifest["mode"] == "trajectory");
    CHECK(manifest["emissions"].get<long>() == ra.emissions);
    CHECK(manifest["rng"].get<std::string>() == kRngIdentity);
    const json side = json::parse(slurp(a / "traj_00001.json"));
    CHECK(side["index"] == 1);
    CHECK(side["jump_times"].size() == side["emissions"].get<std::size_t>());
    CHECK(side["config"]["ensemble"]["seed"] == 5);

    const std::string summary = slurp(a / "summary.csv");
    CHECK(summary.rfind("t,trajectories,S_Q_median,S_Q_q1,S_Q_q3", 0) == 0);
    const std::string traj = slurp(a / "traj_00000.csv");
    CHECK(traj.rfind("t,norm2,N_ph,", 0) == 0);
    CHECK(std::count(traj.begin(), traj.end(), '\n') == 12);

    c.ensemble.seed = 6;
    c.output.directory = b.string();
    run(c);
    CHECK(slurp(a / "traj_00000.json") != slurp(b / "traj_00000.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("zero coupling produces no emissions") {
    const fs::path d = scratch("gamma0");
    RunConfig c = small_config(d);
    c.channels[0].gamma = 0.0;
    const RunResult r = run(c);
    CHECK(r.emissions == 0);
    fs::remove_all(d);
}

TEST_CASE("every mode writes its artifacts") {
    const fs::path d = scratch("modes");
    RunConfig c = small_config(d);

    c.mode = RunMode::GroundState;
    run(c);
    const json gs = json::parse(slurp(d / "groundstate.json"));
    CHECK(gs["dimension"] == 36);
    CHECK(gs["energy"].get<double>() < 0.0);
    CHECK(fs::exists(d / "groundstate.csv"));

    c.mode = RunMode::Sme;
    c.channels[0].efficiency = 0.5;
    c.evolution.t_max = 0.2;
    run(c);
    CHECK(slurp(d / "traj_00000.csv").rfind("t,norm2,N_ph,purity,", 0) == 0);
    CHECK(json::parse(slurp(d / "manifest.json")).contains("sme_dt"));
    CHECK(json::parse(slurp(d / "detection_stats.json")).size() == 3);

    c.mode = RunMode::Thinning;
    run(c);
    const json stats = json::parse(slurp(d / "detection_stats.json"));
    REQUIRE(stats.size() == 3);
    CHECK(stats[0]["efficiency"] == 0.5);
    CHECK(stats[0]["expected_mean"].get<double>() == doctest::Approx(0.5 * stats[0]["emitted"].get<double>()));

    c.mode = RunMode::DescribeGeometry;
    run(c);
    const std::string geo = slurp(d / "geometry.csv");
    CHECK(std::count(geo.begin(), geo.end(), '\n') == 5);
    CHECK(describe_geometry_csv(c) == geo);

    RunConfig mf = parse_config(json{
        {"mode", "meanfield"},
        {"lattice", {{"sites", 20}, {"n_up", 10}, {"n_down", 0}, {"boundary", "antiperiodic"}}},
        {"geometry", {{"preset", "odd-sites"}}},
        {"channel", {{"polarization", "circular-L"}, {"gamma", 0.2}}},
        {"evolution", {{"t_max", 1.0}, {"k_snapshot_times", {0.0, 1.0}}}},
        {"ensemble", {{"trajectories", 2}}},
    });
    mf.output.directory = d.string();
    run(mf);
    CHECK(fs::exists(d / "k_snapshots_00001.csv"));
    const json checks = json::parse(slurp(d / "meanfield_checks.json"));
    CHECK(checks[0]["closure_breakdown"] == false);
    CHECK(slurp(d / "traj_00000.csv").find("N_odd") != std::string::npos);
    fs::remove_all(d);
}

TEST_CASE("capacity limits surface as errors") {
    RunConfig c = small_config(scratch("capacity"));
    c.lattice = {16, 8, 8, Boundary::Open};
    CHECK_THROWS_AS(build_model(c), CapacityError);
    c.lattice = {10, 5, 5, Boundary::Open};
    c.mode = RunMode::Sme;
    CHECK_THROWS_AS(run(c), CapacityError);
}
