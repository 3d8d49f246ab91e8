#include "fermimon/runner.hpp"

#include "fermimon/errors.hpp"
#include "fermimon/io.hpp"
#include "fermimon/parallel.hpp"
#include "fermimon/rng.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fermimon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t capacity_for(RunMode m) { return m == RunMode::Sme ? kDensityMatrixCapacity : kPureStateCapacity; }

Profile channel_profile(const RunConfig& c) { return diffraction_profile(geometry_of(c)); }

}  // namespace

Model build_model(const RunConfig& c) {
    Model m;
    m.basis = std::make_shared<const FockBasis>(c.lattice.sites, c.lattice.n_up, c.lattice.n_down,
                                                capacity_for(c.mode));
    m.hamiltonian = build_hubbard(*m.basis, c.hubbard());
    m.profile = channel_profile(c);
    for (const auto& ch : c.channels) m.channels.push_back(build_jump_operator(*m.basis, m.profile, jump_channel_of(ch)));
    return m;
}

StateVector initial_state(const RunConfig& c, const Model& m) {
    const auto& is = c.initial_state;
    if (is.kind == "ground") {
        const GroundState gs = ground_state(m.hamiltonian);
        return gs.state;
    }
    if (is.kind == "fock") {
        const BasisState s{parse_occupation(is.up), parse_occupation(is.down)};
        const auto idx = m.basis->index(s);
        if (!idx) throw ConfigError("initial Fock state lies outside the configured sector");
        return StateVector::basis_state(m.basis->size(), *idx);
    }
    std::ifstream in(is.path);
    if (!in) throw ConfigError("cannot open initial state file '" + is.path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("malformed initial state file: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("amplitudes") || !doc["amplitudes"].is_array()) {
        throw ConfigError("initial state file must hold {\"amplitudes\": [[re, im], ...]}");
    }
    const auto& a = doc["amplitudes"];
    if (a.size() != m.basis->size()) {
        throw ConfigError("initial state file has " + std::to_string(a.size()) + " amplitudes, sector has "
                          + std::to_string(m.basis->size()));
    }
    CVector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& z = a[i];
        if (z.is_number()) v[static_cast<Eigen::Index>(i)] = z.get<double>();
        else if (z.is_array() && z.size() == 2) v[static_cast<Eigen::Index>(i)] = cplx(z[0].get<double>(), z[1].get<double>());
        else throw ConfigError("initial state amplitudes must be numbers or [re, im] pairs");
    }
    if (!(v.squaredNorm() > 0.0)) throw ConfigError("initial state file holds the zero vector");
    return StateVector(v / v.norm());
}

EvolutionOptions evolution_options(const RunConfig& c) {
    EvolutionOptions o;
    o.t_max = c.evolution.t_max;
    o.snapshot_dt = c.evolution.snapshot_dt;
    o.rtol = c.evolution.rtol;
    o.jump_tol = c.evolution.jump_tol;
    o.integrator = integrator_from_string(c.evolution.integrator);
    o.max_jumps = c.evolution.max_jumps;
    return o;
}

TrajectoryProblem trajectory_problem(const RunConfig& c) {
    Model m = build_model(c);
    TrajectoryProblem p;
    p.initial = initial_state(c, m);
    p.basis = m.basis;
    p.hamiltonian = std::move(m.hamiltonian);
    p.channels = std::move(m.channels);
    p.observables = std::make_shared<const ObservableSet>(p.basis, c.lattice.boundary, c.observables, p.channels);
    return p;
}

SmeProblem sme_problem(const RunConfig& c) {
    Model m = build_model(c);
    SmeProblem p;
    p.initial = DensityMatrix::pure(initial_state(c, m));
    p.basis = m.basis;
    p.hamiltonian = std::move(m.hamiltonian);
    p.channels = std::move(m.channels);
    p.efficiency = c.channels.front().efficiency;
    p.observables = std::make_shared<const ObservableSet>(p.basis, c.lattice.boundary, c.observables, p.channels);
    return p;
}

MeanFieldModel meanfield_model(const RunConfig& c) {
    const ChannelConfig& ch = c.channels.front();
    const JumpChannel jc = jump_channel_of(ch);
    const Profile base = jc.custom_profile ? *jc.custom_profile : channel_profile(c);
    const cplx w_up = polarization_weights(jc).first;
    MeanFieldParams p;
    p.sites = c.lattice.sites;
    p.particles = c.lattice.n_up;
    p.J = c.J;
    p.gamma = ch.gamma;
    p.boundary = c.lattice.boundary;
    for (const auto& z : base) p.profile.push_back(w_up * z);
    return MeanFieldModel(p);
}

MeanFieldOptions meanfield_options(const RunConfig& c) {
    MeanFieldOptions o;
    o.t_max = c.evolution.t_max;
    o.dt = c.evolution.meanfield_dt;
    o.snapshot_dt = c.evolution.snapshot_dt;
    o.k_snapshot_times = c.evolution.k_snapshot_times;
    return o;
}

std::string describe_geometry_csv(const RunConfig& c) {
    const Profile prof = channel_profile(c);
    const auto modes = mode_partition(prof);
    std::vector<int> mode_of(prof.size(), 0);
    for (std::size_t m = 0; m < modes.size(); ++m) {
        for (int site : modes[m].sites) mode_of[static_cast<std::size_t>(site)] = static_cast<int>(m);
    }
    const Profile ak = momentum_profile(prof);
    std::string s = "index,re_J,im_J,mode,re_A,im_A\n";
    for (std::size_t i = 0; i < prof.size(); ++i) {
        s += std::to_string(i) + "," + format_double(prof[i].real()) + "," + format_double(prof[i].imag()) + ","
             + std::to_string(mode_of[i]) + "," + format_double(ak[i].real()) + "," + format_double(ak[i].imag())
             + "\n";
    }
    return s;
}

namespace {

std::string record_name(std::size_t i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "traj_%05zu.%s", i, ext);
    return buf;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Writer {
public:
    Writer(const RunConfig& c) : dir_(c.output.directory) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir_ + "': " + ec.message());
    }

    void text(const std::string& name, const std::string& body) {
        write_text((fs::path(dir_) / name).string(), body);
        files_.push_back(name);
    }
    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    const std::string& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::string dir_;
    std::vector<std::string> files_;
};

void write_records(Writer& w, const RunConfig& c, const std::vector<TrajectoryRecord>& recs) {
    for (const auto& r : recs) {
        w.text(record_name(r.index, "csv"), record_csv(r));
        json side = record_sidecar(r);
        side["config"] = to_json(c);
        w.json_file(record_name(r.index, "json"), side);
    }
    w.text("summary.csv", summary_csv(recs));
    if (c.output.emit_plot_data) w.text("plot_data.csv", plot_data_csv(recs));
}

long total_emissions(const std::vector<TrajectoryRecord>& recs) {
    long n = 0;
    for (const auto& r : recs) n += r.emissions();
    return n;
}

}  // namespace

RunResult run(const RunConfig& c) {
    validate(c);
    const auto started = std::chrono::steady_clock::now();
    const std::string started_utc = utc_now();
    Writer w(c);
    w.json_file("config.json", to_json(c));
    RunResult result;
    const auto n = static_cast<std::size_t>(c.ensemble.trajectories);
    const std::uint64_t seed = c.ensemble.seed;

    json extra = json::object();
    switch (c.mode) {
        case RunMode::DescribeGeometry: {
            w.text("geometry.csv", describe_geometry_csv(c));
            break;
        }
        case RunMode::GroundState: {
            Model m = build_model(c);
            const GroundState gs = ground_state(m.hamiltonian);
            const ObservableSet obs(m.basis, c.lattice.boundary, c.observables, m.channels);
            const auto values = obs.evaluate(gs.state);
            std::string csv;
            for (std::size_t i = 0; i < obs.columns().size(); ++i) csv += (i ? "," : "") + obs.columns()[i];
            csv += "\n";
            for (std::size_t i = 0; i < values.size(); ++i) csv += (i ? "," : "") + format_double(values[i]);
            csv += "\n";
            w.text("groundstate.csv", csv);
            json j{{"energy", gs.energy},
                   {"degeneracy", gs.degeneracy},
                   {"degenerate", gs.degenerate()},
                   {"gap", std::isnan(gs.gap) ? json(nullptr) : json(gs.gap)},
                   {"residual", gs.residual},
                   {"dimension", m.basis->size()},
                   {"boundary", to_string(c.lattice.boundary)}};
            w.json_file("groundstate.json", j);
            break;
        }
        case RunMode::Trajectory: {
            const TrajectoryProblem p = trajectory_problem(c);
            const auto recs = run_ensemble(p, evolution_options(c), seed, n, c.channels.front().efficiency,
                                           c.ensemble.threads);
            write_records(w, c, recs);
            result.emissions = total_emissions(recs);
            break;
        }
        case RunMode::Thinning: {
            const TrajectoryProblem p = trajectory_problem(c);
            const EvolutionOptions opts = evolution_options(c);
            const double eta = c.channels.front().efficiency;
            std::vector<ThinnedRun> runs(n);
            parallel_for(n, c.ensemble.threads, [&](std::size_t i) { runs[i] = thinning_mode(p, opts, eta, seed, i); });
            std::vector<TrajectoryRecord> recs;
            json stats = json::array();
            for (auto& r : runs) {
                const auto& s = r.stats;
                stats.push_back({{"index", r.record.index},
                                 {"emitted", s.emitted},
                                 {"detected", s.detected},
                                 {"efficiency", s.efficiency},
                                 {"expected_mean", s.expected_mean()},
                                 {"expected_variance", s.expected_variance()},
                                 {"snr", std::isinf(s.snr()) ? json(nullptr) : json(s.snr())}});
                recs.push_back(std::move(r.record));
            }
            w.json_file("detection_stats.json", stats);
            write_records(w, c, recs);
            result.emissions = total_emissions(recs);
            break;
        }
        case RunMode::Sme: {
            const SmeProblem p = sme_problem(c);
            SmeOptions opts;
            opts.t_max = c.evolution.t_max;
            opts.snapshot_dt = c.evolution.snapshot_dt;
            opts.dt = c.evolution.sme_dt;
            std::vector<TrajectoryRecord> recs(n);
            parallel_for(n, c.ensemble.threads, [&](std::size_t i) { recs[i] = run_sme(p, opts, seed, i); });
            json stats = json::array();
            for (const auto& r : recs) {
                stats.push_back({{"index", r.index}, {"detected", r.detections()}, {"efficiency", p.efficiency}});
            }
            extra["sme_dt"] = sme_step_size(SmeGenerator(p.hamiltonian, p.channels, p.efficiency), opts);
            w.json_file("detection_stats.json", stats);
            write_records(w, c, recs);
            result.emissions = total_emissions(recs);
            break;
        }
        case RunMode::MeanField: {
            const MeanFieldModel model = meanfield_model(c);
            const MeanFieldOptions opts = meanfield_options(c);
            std::vector<MeanFieldRecord> runs(n);
            parallel_for(n, c.ensemble.threads, [&](std::size_t i) { runs[i] = run_meanfield(model, opts, seed, i); });
            std::vector<TrajectoryRecord> recs;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const auto& r = runs[i];
                if (!r.k_times.empty()) {
                    std::string csv = "t";
                    for (std::size_t m = 0; m < r.k_snapshots.front().size(); ++m) csv += ",n_k" + std::to_string(m);
                    csv += "\n";
                    for (std::size_t s = 0; s < r.k_times.size(); ++s) {
                        csv += format_double(r.k_times[s]);
                        for (double v : r.k_snapshots[s]) csv += "," + format_double(v);
                        csv += "\n";
                    }
                    char name[40];
                    std::snprintf(name, sizeof(name), "k_snapshots_%05zu.csv", i);
                    w.text(name, csv);
                }
                if (r.closure_breakdown) {
                    char name[48];
                    std::snprintf(name, sizeof(name), "closure_breakdown_%05zu.txt", i);
                    w.text(name, r.breakdown_report);
                }
                recs.push_back(r.trace);
            }
            write_records(w, c, recs);
            json mf = json::array();
            for (const auto& r : runs) {
                mf.push_back({{"index", r.trace.index},
                              {"closure_breakdown", r.closure_breakdown},
                              {"max_pair_drift", r.max_pair_drift}});
            }
            w.json_file("meanfield_checks.json", mf);
            result.emissions = total_emissions(recs);
            break;
        }
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"code_version", FERMIMON_VERSION},
                  {"mode", to_string(c.mode)},
                  {"rng", kRngIdentity},
                  {"master_seed", seed},
                  {"trajectories", c.ensemble.trajectories},
                  {"boundary", to_string(c.lattice.boundary)},
                  {"started_utc", started_utc},
                  {"wall_clock_seconds", seconds},
                  {"emissions", result.emissions},
                  {"files", w.files()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    w.json_file("manifest.json", manifest);
    result.directory = w.dir();
    result.files = w.files();
    return result;
}

}  // namespace fermimon
