#include "fermimon/config.hpp"

#include "fermimon/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace fermimon {

using nlohmann::json;

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::GroundState: return "groundstate";
        case RunMode::Trajectory: return "trajectory";
        case RunMode::Sme: return "sme";
        case RunMode::Thinning: return "thinning";
        case RunMode::MeanField: return "meanfield";
        case RunMode::DescribeGeometry: return "describe-geometry";
    }
    return "trajectory";
}

RunMode mode_from_string(const std::string& s) {
    for (RunMode m : {RunMode::GroundState, RunMode::Trajectory, RunMode::Sme, RunMode::Thinning, RunMode::MeanField,
                   RunMode::DescribeGeometry}) {
        if (to_string(m) == s) return m;
    }
    throw ConfigError("unknown mode '" + s
                      + "' (expected groundstate, trajectory, sme, thinning, meanfield or describe-geometry)");
}

std::vector<ObservableKind> default_observables(RunMode mode, Boundary) {
    if (mode == RunMode::MeanField || mode == RunMode::DescribeGeometry) return {};
    return {ObservableKind::Density,
            ObservableKind::Magnetization,
            ObservableKind::StaggeredMagnetization,
            ObservableKind::StaggeredMagnetizationSquared,
            ObservableKind::StaggeredDistribution,
            ObservableKind::StructureFactorQ,
            ObservableKind::StaggeredComponent,
            ObservableKind::OddOccupation,
            ObservableKind::OddOccupationVariance,
            ObservableKind::PhotocountRate};
}

namespace {

// Reads an object's members while remembering which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(child(key) + " must be a boolean");
                out = v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(child(key) + " must be a string");
                out = v.get<std::string>();
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError(child(key) + " must be a number");
                out = v.get<T>();
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
                    throw ConfigError(child(key) + " must be a non-negative integer");
                }
                out = v.get<T>();
            } else {
                if (!v.is_number_integer()) throw ConfigError(child(key) + " must be an integer");
                out = v.get<T>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(child(key) + ": " + e.what());
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown configuration key '" + child(it.key()) + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

cplx parse_complex(const json& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError(path + " must be a number or a [re, im] pair");
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

Profile parse_profile(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + " must be an array");
    Profile p;
    for (std::size_t i = 0; i < v.size(); ++i) p.push_back(parse_complex(v[i], path + "[" + std::to_string(i) + "]"));
    return p;
}

json profile_json(const Profile& p) {
    json a = json::array();
    for (const auto& z : p) a.push_back(complex_json(z));
    return a;
}

BeamKind beam_kind_from_string(const std::string& s) {
    if (s == "traveling") return BeamKind::Traveling;
    if (s == "standing") return BeamKind::Standing;
    throw ConfigError("unknown beam kind '" + s + "' (expected traveling or standing)");
}

std::string to_string(BeamKind k) { return k == BeamKind::Traveling ? "traveling" : "standing"; }

Beam parse_beam(const json& j, const std::string& path) {
    Reader r(j, path);
    Beam b;
    std::string kind = to_string(b.kind);
    r.get("kind", kind);
    b.kind = beam_kind_from_string(kind);
    r.get("kz_d", b.kz_d);
    r.get("phase", b.phase);
    r.finish();
    return b;
}

json beam_json(const Beam& b) { return {{"kind", to_string(b.kind)}, {"kz_d", b.kz_d}, {"phase", b.phase}}; }

ChannelConfig parse_channel(const json& j, const std::string& path) {
    Reader r(j, path);
    ChannelConfig c;
    std::string pol = to_string(c.polarization);
    r.get("polarization", pol);
    c.polarization = polarization_from_string(pol);
    r.get("gamma", c.gamma);
    r.get("efficiency", c.efficiency);
    if (r.has("custom_profile")) {
        const json& v = r.raw("custom_profile");
        if (!v.is_null()) c.custom_profile = parse_profile(v, r.child("custom_profile"));
    }
    if (r.has("spin_weights")) {
        const json& v = r.raw("spin_weights");
        if (!v.is_array() || v.size() != 2) throw ConfigError(r.child("spin_weights") + " must hold two weights");
        c.spin_weights = {parse_complex(v[0], r.child("spin_weights[0]")),
                          parse_complex(v[1], r.child("spin_weights[1]"))};
    }
    r.get("include_bonds", c.include_bonds);
    if (r.has("bond_profile")) c.bond_profile = parse_profile(r.raw("bond_profile"), r.child("bond_profile"));
    r.finish();
    return c;
}

json channel_json(const ChannelConfig& c) {
    json j{{"polarization", to_string(c.polarization)},
           {"gamma", c.gamma},
           {"efficiency", c.efficiency},
           {"spin_weights", json::array({complex_json(c.spin_weights.first), complex_json(c.spin_weights.second)})},
           {"include_bonds", c.include_bonds},
           {"bond_profile", profile_json(c.bond_profile)}};
    j["custom_profile"] = c.custom_profile ? profile_json(*c.custom_profile) : json(nullptr);
    return j;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    Reader top(doc, "");
    RunConfig c;
    if (top.has("mode")) {
        std::string m;
        top.get("mode", m);
        c.mode = mode_from_string(m);
    }
    if (top.has("lattice")) {
        Reader r(top.raw("lattice"), "lattice");
        r.get("sites", c.lattice.sites);
        r.get("n_up", c.lattice.n_up);
        r.get("n_down", c.lattice.n_down);
        std::string b = to_string(c.lattice.boundary);
        r.get("boundary", b);
        c.lattice.boundary = boundary_from_string(b);
        r.finish();
    }
    if (top.has("hubbard")) {
        Reader r(top.raw("hubbard"), "hubbard");
        r.get("J", c.J);
        r.get("U", c.U);
        r.finish();
    }
    if (top.has("geometry")) {
        Reader r(top.raw("geometry"), "geometry");
        if (r.has("preset")) {
            const json& p = r.raw("preset");
            if (p.is_null()) c.geometry.preset.reset();
            else if (p.is_string()) c.geometry.preset = p.get<std::string>();
            else throw ConfigError("geometry.preset must be a string or null");
        }
        if (r.has("probe")) c.geometry.probe = parse_beam(r.raw("probe"), "geometry.probe");
        if (r.has("cavity")) c.geometry.cavity = parse_beam(r.raw("cavity"), "geometry.cavity");
        if (!r.has("preset") && (r.has("probe") || r.has("cavity"))) c.geometry.preset.reset();
        r.finish();
    }
    if (top.has("channel")) {
        const json& v = top.raw("channel");
        c.channels.clear();
        if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                c.channels.push_back(parse_channel(v[i], "channel[" + std::to_string(i) + "]"));
            }
        } else {
            c.channels.push_back(parse_channel(v, "channel"));
        }
    }
    if (top.has("initial_state")) {
        Reader r(top.raw("initial_state"), "initial_state");
        r.get("kind", c.initial_state.kind);
        r.get("up", c.initial_state.up);
        r.get("down", c.initial_state.down);
        r.get("path", c.initial_state.path);
        r.finish();
    }
    if (top.has("evolution")) {
        Reader r(top.raw("evolution"), "evolution");
        auto& e = c.evolution;
        r.get("t_max", e.t_max);
        r.get("snapshot_dt", e.snapshot_dt);
        r.get("rtol", e.rtol);
        r.get("jump_tol", e.jump_tol);
        r.get("sme_dt", e.sme_dt);
        r.get("meanfield_dt", e.meanfield_dt);
        r.get("integrator", e.integrator);
        if (r.has("max_jumps")) {
            const json& v = r.raw("max_jumps");
            if (v.is_null()) e.max_jumps.reset();
            else if (v.is_number_integer()) e.max_jumps = v.get<long>();
            else throw ConfigError("evolution.max_jumps must be an integer or null");
        }
        if (r.has("k_snapshot_times")) {
            const json& v = r.raw("k_snapshot_times");
            if (!v.is_array()) throw ConfigError("evolution.k_snapshot_times must be an array");
            e.k_snapshot_times.clear();
            for (const auto& x : v) {
                if (!x.is_number()) throw ConfigError("evolution.k_snapshot_times must hold numbers");
                e.k_snapshot_times.push_back(x.get<double>());
            }
        }
        r.finish();
    }
    if (top.has("observables")) {
        const json& v = top.raw("observables");
        if (!v.is_array()) throw ConfigError("observables must be an array of names");
        for (const auto& x : v) {
            if (!x.is_string()) throw ConfigError("observables must be an array of names");
            c.observables.push_back(observable_from_string(x.get<std::string>()));
        }
    } else {
        c.observables = default_observables(c.mode, c.lattice.boundary);
    }
    if (top.has("ensemble")) {
        Reader r(top.raw("ensemble"), "ensemble");
        r.get("trajectories", c.ensemble.trajectories);
        r.get("seed", c.ensemble.seed);
        r.get("threads", c.ensemble.threads);
        r.finish();
    }
    if (top.has("output")) {
        Reader r(top.raw("output"), "output");
        r.get("directory", c.output.directory);
        r.get("emit_plot_data", c.output.emit_plot_data);
        r.finish();
    }
    top.finish();
    validate(c);
    return c;
}

RunConfig parse_config_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

json to_json(const RunConfig& c) {
    json j;
    j["mode"] = to_string(c.mode);
    j["lattice"] = {{"sites", c.lattice.sites},
                    {"n_up", c.lattice.n_up},
                    {"n_down", c.lattice.n_down},
                    {"boundary", to_string(c.lattice.boundary)}};
    j["hubbard"] = {{"J", c.J}, {"U", c.U}};
    j["geometry"] = {{"preset", c.geometry.preset ? json(*c.geometry.preset) : json(nullptr)},
                     {"probe", beam_json(c.geometry.probe)},
                     {"cavity", beam_json(c.geometry.cavity)}};
    json chans = json::array();
    for (const auto& ch : c.channels) chans.push_back(channel_json(ch));
    j["channel"] = chans;
    j["initial_state"] = {{"kind", c.initial_state.kind},
                          {"up", c.initial_state.up},
                          {"down", c.initial_state.down},
                          {"path", c.initial_state.path}};
    const auto& e = c.evolution;
    j["evolution"] = {{"t_max", e.t_max},
                      {"snapshot_dt", e.snapshot_dt},
                      {"rtol", e.rtol},
                      {"jump_tol", e.jump_tol},
                      {"sme_dt", e.sme_dt},
                      {"meanfield_dt", e.meanfield_dt},
                      {"integrator", e.integrator},
                      {"max_jumps", e.max_jumps ? json(*e.max_jumps) : json(nullptr)},
                      {"k_snapshot_times", e.k_snapshot_times}};
    json obs = json::array();
    for (auto k : c.observables) obs.push_back(to_string(k));
    j["observables"] = obs;
    j["ensemble"] = {{"trajectories", c.ensemble.trajectories},
                     {"seed", c.ensemble.seed},
                     {"threads", c.ensemble.threads}};
    j["output"] = {{"directory", c.output.directory}, {"emit_plot_data", c.output.emit_plot_data}};
    return j;
}

namespace {

bool is_momentum(ObservableKind k) {
    return k == ObservableKind::MomentumOccupation || k == ObservableKind::OrderParameter
           || k == ObservableKind::BetaOccupation;
}

}  // namespace

void validate(const RunConfig& c) {
    const auto& lat = c.lattice;
    const bool many_body = c.mode != RunMode::MeanField && c.mode != RunMode::DescribeGeometry;
    const int max_sites = many_body ? kMaxSites : kMaxMeanFieldSites;
    if (lat.sites < 1 || lat.sites > max_sites) {
        throw ConfigError("lattice.sites must lie in [1, " + std::to_string(max_sites) + "]");
    }
    if (lat.n_up < 0 || lat.n_up > lat.sites || lat.n_down < 0 || lat.n_down > lat.sites) {
        throw ConfigError("particle counts must lie in [0, lattice.sites]");
    }
    if (!(c.J > 0.0)) throw ConfigError("hubbard.J must be positive");
    if (c.geometry.preset) {
        const auto& names = geometry_preset_names();
        if (std::find(names.begin(), names.end(), *c.geometry.preset) == names.end()) {
            throw ConfigError("unknown geometry preset '" + *c.geometry.preset + "'");
        }
    }
    if (c.channels.empty()) throw ConfigError("at least one channel is required");
    for (const auto& ch : c.channels) {
        if (ch.gamma < 0.0) throw ConfigError("channel.gamma must be >= 0");
        if (!(ch.efficiency >= 0.0 && ch.efficiency <= 1.0)) throw ConfigError("channel.efficiency must lie in [0, 1]");
        if (ch.custom_profile && ch.custom_profile->size() != static_cast<std::size_t>(lat.sites)) {
            throw ConfigError("channel.custom_profile must have one entry per site");
        }
        if (ch.include_bonds) {
            const auto nb = ch.bond_profile.size();
            if (nb != static_cast<std::size_t>(lat.sites - 1) && !(nb == static_cast<std::size_t>(lat.sites) && lat.sites > 2)) {
                throw ConfigError("channel.bond_profile must have L-1 (open) or L (ring) entries");
            }
        }
        if (ch.efficiency != c.channels.front().efficiency) {
            throw ConfigError("all channels must share one detection efficiency");
        }
    }
    const auto& e = c.evolution;
    if (!(e.t_max >= 0.0)) throw ConfigError("evolution.t_max must be >= 0");
    if (!(e.snapshot_dt > 0.0)) throw ConfigError("evolution.snapshot_dt must be positive");
    if (!(e.rtol > 0.0)) throw ConfigError("evolution.rtol must be positive");
    if (!(e.jump_tol > 0.0)) throw ConfigError("evolution.jump_tol must be positive");
    if (!(e.sme_dt >= 0.0)) throw ConfigError("evolution.sme_dt must be >= 0");
    if (!(e.meanfield_dt > 0.0)) throw ConfigError("evolution.meanfield_dt must be positive");
    if (e.integrator != "krylov" && e.integrator != "dormand-prince") {
        throw ConfigError("evolution.integrator must be 'krylov' or 'dormand-prince'");
    }
    if (e.max_jumps && *e.max_jumps <= 0) throw ConfigError("evolution.max_jumps must be positive");

    const auto& is = c.initial_state;
    if (is.kind == "fock") {
        if (is.up.size() != static_cast<std::size_t>(lat.sites) || is.down.size() != static_cast<std::size_t>(lat.sites)) {
            throw ConfigError("initial_state.up/down must have one character per site");
        }
        for (char ch : is.up + is.down) {
            if (ch != '0' && ch != '1') throw ConfigError("initial_state occupations must be 0/1 strings");
        }
        if (std::count(is.up.begin(), is.up.end(), '1') != lat.n_up
            || std::count(is.down.begin(), is.down.end(), '1') != lat.n_down) {
            throw ConfigError("initial_state occupations do not match lattice.n_up / lattice.n_down");
        }
    } else if (is.kind == "file") {
        if (is.path.empty()) throw ConfigError("initial_state.path is required for kind 'file'");
    } else if (is.kind != "ground") {
        throw ConfigError("initial_state.kind must be ground, fock or file");
    }

    for (auto k : c.observables) {
        if (is_momentum(k) && lat.boundary == Boundary::Open) {
            throw ConfigError("observable '" + to_string(k) + "' needs a periodic or antiperiodic boundary");
        }
        if ((k == ObservableKind::OrderParameter || k == ObservableKind::BetaOccupation) && lat.sites % 2 != 0) {
            throw ConfigError("observable '" + to_string(k) + "' needs an even number of sites");
        }
    }
    if (c.ensemble.trajectories < 1) throw ConfigError("ensemble.trajectories must be >= 1");
    if (c.output.directory.empty()) throw ConfigError("output.directory must not be empty");

    if (c.mode == RunMode::MeanField) {
        if (lat.n_down != 0) throw ConfigError("meanfield mode is spinless: set lattice.n_down to 0");
        if (lat.n_up < 0 || lat.n_up > lat.sites) throw ConfigError("lattice.n_up must lie in [0, lattice.sites]");
        if (c.U != 0.0) throw ConfigError("meanfield mode needs U = 0");
        if (lat.boundary == Boundary::Open) throw ConfigError("meanfield mode needs a periodic or antiperiodic boundary");
        if (lat.sites % 2 != 0) throw ConfigError("meanfield mode needs an even number of sites");
        if (c.channels.size() != 1) throw ConfigError("meanfield mode takes exactly one channel");
        if (c.channels.front().include_bonds) throw ConfigError("meanfield mode does not support bond coupling");
    }
}

MeasurementGeometry geometry_of(const RunConfig& c) {
    if (c.geometry.preset) return geometry_preset(*c.geometry.preset, c.lattice.sites);
    return {c.geometry.probe, c.geometry.cavity, c.lattice.sites};
}

JumpChannel jump_channel_of(const ChannelConfig& ch) {
    JumpChannel j;
    j.polarization = ch.polarization;
    j.gamma = ch.gamma;
    j.custom_profile = ch.custom_profile;
    j.spin_weights = ch.spin_weights;
    j.include_bonds = ch.include_bonds;
    j.bond_profile = ch.bond_profile;
    return j;
}

}  // namespace fermimon
