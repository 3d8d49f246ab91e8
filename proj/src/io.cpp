#include "fermimon/io.hpp"

#include "fermimon/errors.hpp"
#include "fermimon/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fermimon {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return {buf, res.ptr};
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << body;
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string record_csv(const TrajectoryRecord& rec) {
    std::string s = "t,norm2,N_ph";
    const bool purity = !rec.purity.empty();
    if (purity) s += ",purity";
    for (const auto& c : rec.columns) s += "," + c;
    s += "\n";
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        s += format_double(rec.times[k]);
        s += "," + format_double(rec.norm2[k]);
        s += "," + std::to_string(rec.photocount[k]);
        if (purity) s += "," + format_double(rec.purity[k]);
        for (double v : rec.rows[k]) s += "," + format_double(v);
        s += "\n";
    }
    return s;
}

nlohmann::json record_sidecar(const TrajectoryRecord& rec) {
    nlohmann::json j;
    j["master_seed"] = rec.seed;
    j["index"] = rec.index;
    j["rng"] = kRngIdentity;
    j["jump_times"] = rec.jump_times;
    j["jump_channels"] = rec.jump_channels;
    std::vector<int> det(rec.detected.begin(), rec.detected.end());
    j["detected"] = det;
    j["emissions"] = rec.emissions();
    j["detections"] = rec.detections();
    j["truncated"] = rec.truncated;
    return j;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return v[lo] + w * (v[hi] - v[lo]);
}

namespace {

const std::vector<std::string> kSummaryColumns{"S_Q", "Ms2", "stag_m", "N_odd", "var_N_odd", "rate"};

}  // namespace

std::string summary_csv(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) return "t\n";
    std::size_t n = records.front().times.size();
    for (const auto& r : records) n = std::min(n, r.times.size());

    std::vector<std::string> cols;
    for (const auto& name : kSummaryColumns) {
        const bool everywhere = std::all_of(records.begin(), records.end(), [&](const TrajectoryRecord& r) {
            return std::find(r.columns.begin(), r.columns.end(), name) != r.columns.end();
        });
        if (everywhere) cols.push_back(name);
    }
    std::string s = "t,trajectories";
    for (const auto& c : cols) s += "," + c + "_median," + c + "_q1," + c + "_q3";
    s += ",N_ph_mean\n";

    std::vector<std::vector<std::size_t>> idx(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (const auto& c : cols) idx[r].push_back(records[r].column(c));
    }
    std::vector<double> sample(records.size());
    for (std::size_t k = 0; k < n; ++k) {
        s += format_double(records.front().times[k]) + "," + std::to_string(records.size());
        for (std::size_t c = 0; c < cols.size(); ++c) {
            for (std::size_t r = 0; r < records.size(); ++r) sample[r] = records[r].rows[k][idx[r][c]];
            s += "," + format_double(quantile(sample, 0.5)) + "," + format_double(quantile(sample, 0.25)) + ","
                 + format_double(quantile(sample, 0.75));
        }
        double mean = 0.0;
        for (const auto& r : records) mean += static_cast<double>(r.photocount[k]);
        s += "," + format_double(mean / static_cast<double>(records.size())) + "\n";
    }
    return s;
}

std::string plot_data_csv(const std::vector<TrajectoryRecord>& records) {
    std::string s = "trajectory,t,variable,value\n";
    for (const auto& r : records) {
        const std::string id = std::to_string(r.index);
        for (std::size_t k = 0; k < r.times.size(); ++k) {
            const std::string prefix = id + "," + format_double(r.times[k]) + ",";
            s += prefix + "norm2," + format_double(r.norm2[k]) + "\n";
            s += prefix + "N_ph," + std::to_string(r.photocount[k]) + "\n";
            if (!r.purity.empty()) s += prefix + "purity," + format_double(r.purity[k]) + "\n";
            for (std::size_t c = 0; c < r.columns.size(); ++c) {
                s += prefix + r.columns[c] + "," + format_double(r.rows[k][c]) + "\n";
            }
        }
    }
    return s;
}

}  // namespace fermimon
