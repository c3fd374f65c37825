#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sktmorse/continuation.hpp"
#include "sktmorse/model.hpp"

namespace skt {

// Full run configuration; defaults reproduce the reference parameter set
// alpha=20, b1=3, b2=2, c1=2, c2=1 on (-0.5, 0.5) at n = 400.
struct RunConfig {
  ModelParams model;
  int n = 400;
  StepControls controls;
  double lambda_min = 5.0;    // trivial-branch start
  double lambda_max = 100.0;
  std::vector<std::string> branches = {"trivial",       "semitrivial_u",
                                       "semitrivial_v", "coexistence",
                                       "s2",            "s3"};
  std::filesystem::path output_dir = "out";
  unsigned long long seed = 1;
};

// Key = value text format, '#' comments, unknown keys rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);
void apply_config_override(RunConfig& config, const std::string& key,
                           const std::string& value);
std::string config_to_string(const RunConfig& config);

struct SnapshotData {
  SteadyState state;
  ModelParams params;
  int n = 0;
  int morse_index = -1;
};

// CSV (x, u, v) with shortest-round-trip doubles plus a JSON sidecar carrying
// the model parameters, grid size, branch tag and Morse index. Save-then-load
// reproduces the vectors bit for bit.
void save_snapshot(const SnapshotData& snap, const Grid& grid,
                   const std::filesystem::path& path);
SnapshotData load_snapshot(const std::filesystem::path& path);

// Branch table with one row per continuation point.
void write_branch_csv(const Branch& branch, const Grid& grid,
                      const std::filesystem::path& path);
// Parse a branch CSV back (column check + row count; used by tests/tools).
std::vector<std::vector<double>> read_branch_csv(
    const std::filesystem::path& path);

struct NamedEvent {
  std::string branch;
  double lambda_star = 0.0;
  int crossing_direction = 0;
};
void write_events_json(const std::vector<NamedEvent>& events,
                       const std::filesystem::path& path);
std::vector<NamedEvent> read_events_json(const std::filesystem::path& path);

struct DiagramResult {
  std::vector<std::filesystem::path> files;
  std::vector<NamedEvent> events;
  std::vector<std::string> skipped;   // branches without a seed in range
  std::vector<std::string> stalled;   // branches that ended on step underflow
  bool partial = false;
};

// Traces the requested branches, detects bifurcations on the coexistence
// branch, seeds the pitchfork children and writes per-branch CSVs, the events
// JSON and the Morse-index diagram table. Parallel across branches, capped by
// SKT_MORSE_THREADS.
DiagramResult run_diagram(const RunConfig& config);

// Steady state by branch name at the given lambda: trivial, semitrivial_u,
// semitrivial_v, coexistence, s2_plus, s2_minus, s3_plus, s3_minus.
SteadyState named_state(const ModelParams& params, const Grid& grid,
                        const std::string& name, double lambda,
                        const NewtonSettings& settings = {});

// Shortest round-trip decimal formatting used by every writer.
std::string format_double(double x);

}  // namespace skt
