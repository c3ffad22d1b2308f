#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"
#include "qtrack/hybrid.hpp"
#include "qtrack/sme.hpp"

// CSV layouts. Every file starts with one metadata line
//   # key=value,key=value,...
// followed by a column header and data rows. Numbers are printed with
// %.17g so that they round-trip exactly.
//
//   trajectory : t,r_x,r_y,r_z,dy          (metadata seed,stream_id,omega_x,k,dt,n_steps)
//                row n holds the state at t = n dt and the increment over [t, t + dt);
//                the final row carries the end state and an empty dy.
//   discrete   : n,t_n,y_n                 (metadata delta_t,seed)
//   posterior  : t,lambda,P                (metadata k,dt)
//   estimates  : t,mean,std,map            (Bayesian time series)
//   classical  : method,window_start,window_end,omega_hat,std_or_flag,iterations

namespace qtrack::io {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Metadata = std::map<std::string, std::string>;

inline void write_metadata(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv) {
    os << "# ";
    for (std::size_t i = 0; i < kv.size(); ++i) os << (i ? "," : "") << kv[i].first << '=' << kv[i].second;
    os << '\n';
}

inline Metadata parse_metadata(const std::string& line) {
    Metadata md;
    if (line.rfind("# ", 0) != 0) throw Error(ErrorKind::Io, "missing '# key=value' metadata line");
    std::stringstream ss(line.substr(2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Io, "bad metadata entry '" + item + "'");
        md[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return md;
}

inline double md_number(const Metadata& md, const std::string& key) {
    const auto it = md.find(key);
    if (it == md.end()) throw Error(ErrorKind::Io, "metadata key '" + key + "' missing");
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Io, "metadata key '" + key + "' is not numeric");
    }
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    return is;
}

struct TrajectoryMeta {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    double omega_x = 0.0;
    double k = 0.0;
};

inline void write_trajectory(std::ostream& os, const Trajectory& tr, const TrajectoryMeta& meta) {
    const double dt = tr.record.dt;
    write_metadata(os, {{"seed", std::to_string(meta.seed)},
                        {"stream_id", std::to_string(meta.stream_id)},
                        {"omega_x", fmt(meta.omega_x)},
                        {"k", fmt(meta.k)},
                        {"dt", fmt(dt)},
                        {"n_steps", std::to_string(tr.record.size())}});
    os << "t,r_x,r_y,r_z,dy\n";
    for (std::size_t n = 0; n < tr.states.size(); ++n) {
        const auto& s = tr.states[n];
        os << fmt(dt * static_cast<double>(n)) << ',' << fmt(s.x) << ',' << fmt(s.y) << ',' << fmt(s.z) << ',';
        if (n < tr.record.size()) os << fmt(tr.record.increments[n]);
        os << '\n';
    }
}

struct LoadedTrajectory {
    Metadata meta;
    std::vector<BlochState> states;
    MeasurementRecord record;
};

/// Reads a trajectory dump; only the dy column is required to be present.
inline LoadedTrajectory read_trajectory(std::istream& is) {
    LoadedTrajectory out;
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::Io, "empty trajectory file");
    out.meta = parse_metadata(line);
    out.record.dt = md_number(out.meta, "dt");
    if (!std::getline(is, line) || line != "t,r_x,r_y,r_z,dy") throw Error(ErrorKind::Io, "bad trajectory header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5) throw Error(ErrorKind::Io, "trajectory row needs 5 columns: '" + line + "'");
        try {
            out.states.push_back({std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])});
            if (!cells[4].empty()) out.record.increments.push_back(std::stod(cells[4]));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Io, "non-numeric trajectory row: '" + line + "'");
        }
    }
    return out;
}

inline void write_discrete(std::ostream& os, const DiscreteRecord& disc, std::uint64_t seed) {
    write_metadata(os, {{"delta_t", fmt(disc.delta_t)}, {"seed", std::to_string(seed)}});
    os << "n,t_n,y_n\n";
    for (std::size_t n = 0; n < disc.size(); ++n)
        os << n << ',' << fmt(disc.time(n)) << ',' << fmt(disc.samples[n]) << '\n';
}

inline DiscreteRecord read_discrete(std::istream& is, std::uint64_t* seed = nullptr) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::Io, "empty record file");
    const auto md = parse_metadata(line);
    DiscreteRecord disc;
    disc.delta_t = md_number(md, "delta_t");
    if (seed) *seed = static_cast<std::uint64_t>(md_number(md, "seed"));
    if (!std::getline(is, line) || line != "n,t_n,y_n") throw Error(ErrorKind::Io, "bad record header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3) throw Error(ErrorKind::Io, "record row needs 3 columns: '" + line + "'");
        try {
            disc.samples.push_back(std::stod(cells[2]));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Io, "non-numeric record row: '" + line + "'");
        }
    }
    return disc;
}

inline void write_posterior_header(std::ostream& os, const HybridPosterior& h) {
    write_metadata(os, {{"k", fmt(h.k())}, {"dt", fmt(h.dt())}});
    os << "t,lambda,P\n";
}

inline void write_posterior_snapshot(std::ostream& os, const HybridPosterior& h) {
    const auto pts = h.points();
    const auto w = h.weights();
    const std::string t = fmt(h.time());
    for (std::size_t j = 0; j < pts.size(); ++j) os << t << ',' << fmt(pts[j]) << ',' << fmt(w[j]) << '\n';
}

inline void write_estimate_header(std::ostream& os) { os << "t,mean,std,map\n"; }

inline void write_estimate_row(std::ostream& os, double t, const FrequencyEstimate& e) {
    os << fmt(t) << ',' << fmt(e.mean) << ',' << fmt(e.std) << ',' << fmt(e.map) << '\n';
}

inline void write_classical_header(std::ostream& os) {
    os << "method,window_start,window_end,omega_hat,std_or_flag,iterations\n";
}

inline void write_classical_row(std::ostream& os, double window_start, double window_end, const FrequencyEstimate& e) {
    os << e.method << ',' << fmt(window_start) << ',' << fmt(window_end) << ',' << fmt(e.mean) << ','
       << (e.flagged() ? std::string(to_string(e.status)) : fmt(e.std)) << ',' << e.iterations << '\n';
}

} // namespace qtrack::io
