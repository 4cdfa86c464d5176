#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "lmcf/diagnostics.hpp"
#include "lmcf/flow.hpp"

namespace lmcf::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;
/// Code version stamp carried by every output file.
std::string code_version();

// plane pairs / structures (schema: frames as 4-vectors, rotation_phase)
json to_json(const CalibratedStructure& s);
CalibratedStructure structure_from_json(const json& j);
json to_json(const PlanePair& V);
PlanePair pair_from_json(const json& j);

// surface states; large arrays go to a sidecar binary file when `bin` is
// non-empty (raw little-endian doubles, exact round-trip)
json state_to_json(const SurfaceState& s, const fs::path& bin = {});
SurfaceState state_from_json(const json& j, const fs::path& dir = {});

// reports (D_V = infinity is written as the string "inf")
json to_json(const ExcessReport& r);
json to_json(const DistanceReport& r);
json to_json(const LawlorFit& f, double scale_r, const Vec4& center,
             double lambda_min, double lambda_max, double residual_note);

// meshes in OFF format extended to 4 coordinates per vertex ("OFF4")
void write_off4(const Mesh4D& m, const fs::path& path);
Mesh4D read_off4(const fs::path& path);

// trace persistence: directory with manifest.json, checkpoints
// (cp_NNN.json + cp_NNN.bin) and channels.csv
void save_trace(const FlowTrace& tr, const fs::path& dir,
                const json& config_echo);
FlowTrace load_trace(const fs::path& dir);

/// CSV with %.17g formatting: bit-stable across reruns.
void write_csv(const fs::path& path, const std::vector<std::string>& columns,
               const std::vector<double>& times,
               const std::vector<std::vector<double>>& rows);

/// Minimal SVG line chart (one polyline per series, log-scale optional).
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};
void write_svg_chart(const fs::path& path, const std::vector<SvgSeries>& series,
                     const std::string& title, bool logy = false);

/// FNV-1a hash of a canonicalized config dump (provenance stamping).
std::string config_hash(const json& config);

}  // namespace lmcf::io
