#pragma once

/**
 * @file io.hpp
 * @brief Persistence: diagnostics CSV (documented column order), trajectory
 *        checkpoints as flat binary with a JSON sidecar, run manifests, and
 *        atomic writes (temp + rename). All numbers are shortest round-trip
 *        decimals so identical runs produce identical bytes.
 */

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forchlab/config.hpp"
#include "forchlab/diagnostics.hpp"

namespace forchlab {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return out;
}

inline RunConfig parse_config_file(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline std::uint64_t fnv1a_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// --- diagnostics CSV ------------------------------------------------------

inline const char* kSingleCsvHeader =
    "t,pbar_l2phi_sq,H_int,gradp_w1,gradpbar_w1,pbart_l2phi_sq,G,G1,G2,M";
inline const char* kPairCsvHeader = "t,D,h1,h2,R,V,Pbar_l2phi_sq,gradPbar_w1";

inline std::string single_series_csv(const SingleSeries& s) {
    std::string out = kSingleCsvHeader;
    out += "\n";
    for (size_t k = 0; k < s.size(); ++k) {
        out += format_double(s.t[k]) + "," + format_double(s.pbar_sq[k]) + "," +
               format_double(s.H_int[k]) + "," + format_double(s.gradp_w1[k]) + "," +
               format_double(s.gradpbar_w1[k]) + "," + format_double(s.pbart_sq[k]) + "," +
               format_double(s.G[k]) + "," + format_double(s.G1[k]) + "," +
               format_double(s.G2[k]) + "," + format_double(s.M[k]) + "\n";
    }
    return out;
}

inline std::string pair_series_csv(const PairSeries& p) {
    std::string out = kPairCsvHeader;
    out += "\n";
    for (size_t k = 0; k < p.size(); ++k) {
        out += format_double(p.t[k]) + "," + format_double(p.D[k]) + "," +
               format_double(p.h1[k]) + "," + format_double(p.h2[k]) + "," +
               format_double(p.R[k]) + "," + format_double(p.V[k]) + "," +
               format_double(p.Pbar_sq[k]) + "," + format_double(p.gradPbar_w1[k]) + "\n";
    }
    return out;
}

// --- trajectory checkpoints ------------------------------------------------

inline void write_trajectory(const Trajectory& traj, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Grid& g = traj.medium->grid;

    std::string blob;
    blob.reserve(traj.states.size() * size_t(g.num_cells()) * sizeof(double));
    for (const auto& st : traj.states) {
        const char* bytes = reinterpret_cast<const char*>(st.p.v.data());
        blob.append(bytes, st.p.v.size() * sizeof(double));
    }
    write_file_atomic(dir + "/trajectory.bin", blob);

    nlohmann::json side;
    side["schema_version"] = kSchemaVersion;
    side["layout"] = "state-major float64 little-endian";
    side["fields"] = {"p"};
    side["grid"] = {{"dim", g.dim},
                    {"n", {g.n[0], g.n[1]}},
                    {"lo", {g.lo[0], g.lo[1]}},
                    {"hi", {g.hi[0], g.hi[1]}}};
    std::vector<double> times;
    for (const auto& st : traj.states) times.push_back(st.t);
    side["times"] = times;
    side["dt"] = traj.dt;
    write_file_atomic(dir + "/trajectory.json", side.dump(2) + "\n");
}

/** Rebuild a Trajectory from checkpoints; medium and boundary are re-derived
 *  from the config, the sidecar must match the grid. */
inline Trajectory load_trajectory(const std::string& dir, const MediumSpec& medium,
                                  const BoundaryExtension& boundary) {
    const nlohmann::json side = nlohmann::json::parse(read_text_file(dir + "/trajectory.json"));
    const Grid& g = medium.grid;
    if (side.at("grid").at("dim").get<int>() != g.dim ||
        side.at("grid").at("n").at(0).get<int>() != g.n[0] ||
        side.at("grid").at("n").at(1).get<int>() != g.n[1])
        throw std::runtime_error("load_trajectory: sidecar grid does not match the config");

    const std::string blob = read_text_file(dir + "/trajectory.bin");
    const std::vector<double> times = side.at("times").get<std::vector<double>>();
    for (size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw std::runtime_error("load_trajectory: times must strictly increase");
    const size_t ncells = size_t(g.num_cells());
    if (blob.size() != times.size() * ncells * sizeof(double))
        throw std::runtime_error("load_trajectory: binary size does not match the sidecar");

    Trajectory traj;
    traj.medium = std::make_shared<MediumSpec>(medium);
    traj.boundary = boundary;
    traj.dt = side.value("dt", 0.0);
    const double* data = reinterpret_cast<const double*>(blob.data());
    for (size_t k = 0; k < times.size(); ++k) {
        PressureState st;
        st.t = times[k];
        st.p = Field(g);
        std::copy(data + k * ncells, data + (k + 1) * ncells, st.p.v.begin());
        st.pbar = st.p;
        const Field Psi = boundary.sample(g, st.t);
        for (size_t c = 0; c < ncells; ++c) st.pbar[c] -= Psi[c];
        traj.states.push_back(std::move(st));
    }
    return traj;
}

// --- run manifest -----------------------------------------------------------

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string code_version = kCodeVersion;
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;
    int pass = 0, fail = 0, inconclusive = 0;
    std::string timestamp;  // excluded from the determinism contract

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = kSchemaVersion;
        j["config_hash"] = config_hash;
        j["code_version"] = code_version;
        j["wall_seconds"] = wall_seconds;
        j["outputs"] = outputs;
        j["verdicts"] = {{"pass", pass}, {"fail", fail}, {"inconclusive", inconclusive}};
        j["timestamp"] = timestamp;
        return j;
    }
};

}  // namespace forchlab
