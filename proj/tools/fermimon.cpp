#include "fermimon/config.hpp"
#include "fermimon/errors.hpp"
#include "fermimon/runner.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long> trajectories;
    std::optional<std::string> out;
    bool emit_plot_data = false;
};

nlohmann::json load_document(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw fermimon::ConfigError("cannot open configuration file '" + path + "'");
    try {
        nlohmann::json doc;
        in >> doc;
        if (!doc.is_object()) throw fermimon::ConfigError("configuration root must be a JSON object");
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw fermimon::ConfigError("malformed configuration '" + path + "': " + e.what());
    }
}

int execute(const std::string& mode, const Flags& f) {
    nlohmann::json doc = load_document(f.config);
    doc["mode"] = mode;
    if (f.seed) doc["ensemble"]["seed"] = *f.seed;
    if (f.trajectories) doc["ensemble"]["trajectories"] = *f.trajectories;
    if (f.out) doc["output"]["directory"] = *f.out;
    if (f.emit_plot_data) doc["output"]["emit_plot_data"] = true;
    const fermimon::RunConfig cfg = fermimon::parse_config(doc);
    if (cfg.mode == fermimon::RunMode::DescribeGeometry && !f.out) {
        std::cout << fermimon::describe_geometry_csv(cfg);
        return 0;
    }
    const fermimon::RunResult res = fermimon::run(cfg);
    std::cout << res.directory << ": " << res.files.size() << " files, " << res.emissions << " emissions\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-trajectory simulator for fermions under global optical measurement"};
    app.require_subcommand(1);
    app.set_version_flag("--version", FERMIMON_VERSION);

    Flags flags;
    std::string selected;
    const std::pair<const char*, const char*> commands[] = {
        {"groundstate", "ground state energy, degeneracy and observables"},
        {"trajectory", "pure-state quantum-jump trajectories"},
        {"sme", "conditional density matrix at finite efficiency"},
        {"thinning", "pure trajectories with Bernoulli-thinned detections"},
        {"meanfield", "stochastic mean-field runs for large spinless chains"},
        {"describe-geometry", "print per-site coefficients, modes and momentum profile"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "JSON run configuration");
        sub->add_option("--seed", flags.seed, "master seed");
        sub->add_option("--trajectories", flags.trajectories, "ensemble size");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_flag("--emit-plot-data", flags.emit_plot_data, "write long-format plot_data.csv");
        sub->callback([&selected, name] { selected = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return execute(selected, flags);
    } catch (const fermimon::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fermimon::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const fermimon::SectorError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fermimon::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
