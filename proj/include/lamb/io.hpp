#pragma once
// Run configuration, result files and run manifests for the command-line tool.
//
// The configuration is a JSON object; docs/config.md lists every key. Unknown
// keys, wrong types and unphysical values are rejected with the line they sit on.

#include "lamb/compare.hpp"
#include "lamb/forward3d.hpp"
#include "lamb/inverse.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamb {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& source, int line, const std::string& msg);
  std::string source;
  int line = 0;  // 1-based, 0 when not tied to a line
};

struct RunConfig {
  Material material;

  struct Frequency {
    Real omega = 13.7;
    // dispersion sweep: omega_min + (omega_max - omega_min) m / steps, m = 0..steps
    Real omega_min = 0.01, omega_max = 3.0;
    int steps = 299;
  } frequency;

  struct Solver {
    int n_modes = 20;
    int section_order = 16;
    int nz = 20;            // depth intervals of field outputs
    Real dx = 0.01;         // modal field spacing
    Real x_min = -3, x_max = 3;
    Real fd_spacing = 2e-3;
    Real fd_x_min = -6, fd_x_max = 6;
    Real pml_left = -4, pml_right = 4, pml_slope = 1;
    Real window = 3;        // comparison half width
    int plane_points = 128;  // 3D lateral grid, points per side
    Real plane_half_width = 2.4;
    int depths = 33;
  } solver;

  std::string source = "e1e2";  // e1, e2, e1e2, e3, e4

  struct Defect {
    std::string kind = "e5";  // e5, e6, amplitude
    Real amplitude = 0.1;
  } defect;

  struct Synthesis {
    std::string path = "born";  // born, oracle
    Real omega_max = 17;
    int count = 170;
    Real noise = 0;
    std::uint64_t seed = 1;
    Real window_left = 1, window_right = 2.5;
    Real spacing = 0.01;
  } synthesis;

  struct Inversion {
    std::string method = "ls";  // ls, fft
    Real reg = 1e-4;
    Real support_left = 3, support_right = 5;
    Real node_spacing = 0.02;
    int robust_iterations = 20;
    Real min_xi_fraction = 0.05;
    std::string measurements;  // CSV path; empty: synthesize from the defect
  } inversion;

  std::string out_dir = "out";
  int threads = 1;

  SynthesisOptions synthesis_options() const;
  ExtractionOptions extraction_options() const;
  InversionOptions inversion_options() const;
  CompareOptions compare_options() const;
  DefectProfile defect_profile() const;
};

/// Parses configuration text; `source` names it in diagnostics.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Effective configuration as JSON text (sorted keys, stable formatting).
std::string config_to_json(const RunConfig& cfg);

Source2D source2d_by_name(const std::string& name);
Source3D source3d_by_name(const std::string& name);

// ---- result files -----------------------------------------------------------

/// x, z, re_u, im_u, re_v, im_v with physical z of each node.
void write_fd_csv(std::ostream& os, const FDSolution& s);

/// omega, x, re_u, im_u
void write_measurements_csv(std::ostream& os, const MeasurementSet& m);
MeasurementSet read_measurements_csv(std::istream& is, const std::string& source = "<measurements>");

/// mode, omega, xi, re_d, im_d, re_c1, im_c1, re_c2, im_c2, used, flag
void write_extraction_csv(std::ostream& os, const ExtractionTable& t);

/// x, g1, g2 and, with a truth, g1_true, g2_true.
void write_reconstruction_csv(std::ostream& os, const Reconstruction& r, const DefectProfile* truth = nullptr);

/// 64-bit FNV-1a, hex.
std::string content_hash(const std::string& bytes);

/// manifest.json: command, versions, input hash, effective parameters, outputs.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::string& config_text, const std::vector<std::string>& outputs);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace lamb
