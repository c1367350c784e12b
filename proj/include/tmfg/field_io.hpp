#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tmfg/grid.hpp"
#include "tmfg/hamiltonian.hpp"
#include "tmfg/time_grid.hpp"

namespace tmfg {

struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace field_file {

inline constexpr char kMagic[8] = {'T', 'M', 'F', 'G', 'F', 'L', 'D', '\0'};
inline constexpr std::uint32_t kVersion = 1;

}  // namespace field_file

// Plain binary field file: 8-byte magic, u32 version, u32 rows (i), u32
// cols (j), f64 time tag, u32 row-major flag, then rows*cols doubles stored
// row-major in i. Round-trips are bit-exact.
inline void write_field(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open '" + path.string() + "' for writing");
    auto put_u32 = [&](std::uint32_t x) { out.write(reinterpret_cast<const char*>(&x), 4); };
    out.write(field_file::kMagic, 8);
    put_u32(field_file::kVersion);
    put_u32(static_cast<std::uint32_t>(f.nx));
    put_u32(static_cast<std::uint32_t>(f.nx));
    out.write(reinterpret_cast<const char*>(&f.time_tag), 8);
    put_u32(1);  // row-major
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!out) throw ArtifactError("write failed for '" + path.string() + "'");
}

inline ScalarField read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open field file '" + path.string() + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, field_file::kMagic, 8) != 0)
        throw ArtifactError("bad magic in '" + path.string() + "'");
    auto get_u32 = [&]() {
        std::uint32_t x = 0;
        in.read(reinterpret_cast<char*>(&x), 4);
        return x;
    };
    const std::uint32_t version = get_u32();
    if (version != field_file::kVersion)
        throw ArtifactError("unsupported field file version in '" + path.string() + "'");
    const std::uint32_t ni = get_u32();
    const std::uint32_t nj = get_u32();
    double time_tag = 0.0;
    in.read(reinterpret_cast<char*>(&time_tag), 8);
    const std::uint32_t row_major = get_u32();
    if (!in || ni != nj || row_major != 1)
        throw ArtifactError("malformed header in '" + path.string() + "'");
    ScalarField f(static_cast<int>(ni), 0.0, time_tag);
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!in) throw ArtifactError("truncated field file '" + path.string() + "'");
    return f;
}

struct CheckpointEntry {
    std::string kind;  // "V", "rho", "ustar", "wstar"
    int theta = 0;
    double time = 0.0;
    std::string file;  // relative to the artifacts directory
};

inline void write_checkpoint_index(const std::filesystem::path& path,
                                   const std::vector<CheckpointEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw ArtifactError("cannot open '" + path.string() + "' for writing");
    out << "kind,theta,time,file\n";
    for (const auto& e : entries)
        out << e.kind << ',' << e.theta << ',' << format_g17(e.time) << ',' << e.file << "\n";
}

inline std::vector<CheckpointEntry> read_checkpoint_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot open checkpoint index '" + path.string() + "'");
    std::vector<CheckpointEntry> entries;
    std::string line;
    if (!std::getline(in, line)) throw ArtifactError("empty checkpoint index");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        CheckpointEntry e;
        std::string theta, time;
        if (!std::getline(ss, e.kind, ',') || !std::getline(ss, theta, ',') ||
            !std::getline(ss, time, ',') || !std::getline(ss, e.file))
            throw ArtifactError("malformed index line: " + line);
        e.theta = std::stoi(theta);
        e.time = std::stod(time);
        entries.push_back(std::move(e));
    }
    return entries;
}

// Load one kind of checkpointed field back into a trajectory.
inline TrajectoryStore<ScalarField> load_field_trajectory(
    const std::filesystem::path& artifacts_dir, const std::vector<CheckpointEntry>& index,
    const std::string& kind) {
    TrajectoryStore<ScalarField> traj;
    for (const auto& e : index) {
        if (e.kind != kind) continue;
        traj.record(e.theta, e.time, read_field(artifacts_dir / e.file));
    }
    traj.finalize_ascending();
    if (traj.empty()) throw ArtifactError("no '" + kind + "' checkpoints in artifacts");
    return traj;
}

inline TrajectoryStore<ControlFields> load_control_trajectory(
    const std::filesystem::path& artifacts_dir, const std::vector<CheckpointEntry>& index) {
    TrajectoryStore<ScalarField> us = load_field_trajectory(artifacts_dir, index, "ustar");
    TrajectoryStore<ScalarField> ws = load_field_trajectory(artifacts_dir, index, "wstar");
    if (us.size() != ws.size()) throw ArtifactError("ustar/wstar checkpoint mismatch");
    TrajectoryStore<ControlFields> traj;
    for (std::size_t s = 0; s < us.size(); ++s) {
        ControlFields cf;
        cf.time_tag = us.time(s);
        cf.u_star = us.snapshot(s);
        cf.w_star = ws.snapshot(s);
        traj.record(us.theta(s), us.time(s), std::move(cf));
    }
    return traj;
}

}  // namespace tmfg
