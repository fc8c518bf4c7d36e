// lambkit: command-line front end for the plate-wave toolkit.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration or input error,
// 3 critical frequency, 4 solver failure.

#include "lamb/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace lamb;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kCritical = 3, kSolver = 4 };

struct Flags {
  std::string config, out_dir, kase;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

struct Run {
  RunConfig cfg;
  std::string config_text;
  fs::path dir;
  std::vector<std::string> outputs;

  std::ofstream open(const std::string& name) {
    outputs.push_back(name);
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw ConfigError((dir / name).string(), 0, "cannot write output file");
    return os;
  }
};

void note(const std::string& s) { std::cerr << "lambkit: " << s << '\n'; }

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

Real since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
}

/// `--case` for defect-driven commands: e5, e6 or amplitude=A.
void apply_defect_case(RunConfig& c, const std::string& k) {
  if (k.empty()) return;
  if (k == "e5" || k == "e6") {
    c.defect.kind = k;
  } else if (k.rfind("amplitude=", 0) == 0) {
    c.defect.kind = "amplitude";
    try {
      c.defect.amplitude = std::stod(k.substr(10));
    } catch (const std::exception&) {
      throw ConfigError("--case", 0, "bad amplitude in '" + k + "'");
    }
  } else {
    throw ConfigError("--case", 0, "'" + k + "' is not e5, e6 or amplitude=A");
  }
}

// ---- subcommands -----------------------------------------------------------

int cmd_dispersion(Run& r) {
  const auto& f = r.cfg.frequency;
  auto os = r.open("atlas.csv");
  write_atlas_header(os);
  int skipped = 0;
  for (int m = 0; m <= f.steps; ++m) {
    const Real w = f.omega_min + (f.omega_max - f.omega_min) * m / f.steps;
    try {
      write_atlas_rows(os, find_roots(w, r.cfg.material, r.cfg.solver.n_modes));
    } catch (const CriticalFrequency&) {
      ++skipped;
      note("omega = " + fmt(w, 10) + " is critical; left out of the atlas");
    }
  }
  std::cout << "atlas: " << f.steps + 1 - skipped << " frequencies, " << skipped << " critical\n";
  return kOk;
}

int cmd_modes(Run& r) {
  const Real w = r.cfg.frequency.omega;
  const auto roots = find_roots(w, r.cfg.material, r.cfg.solver.n_modes);
  {
    auto os = r.open("roots.csv");
    write_atlas_header(os);
    write_atlas_rows(os, roots);
  }
  const SectionGrid grid = gauss_section(2 * r.cfg.solver.section_order, r.cfg.material.h);
  for (const ModeRoot& root : roots) {
    char name[32];
    std::snprintf(name, sizeof name, "mode_%02d.csv", root.index);
    auto os = r.open(name);
    write_profile_csv(os, make_mode(root, r.cfg.material), grid);
  }
  std::cout << "modes: " << roots.size() << " profiles at omega = " << w << '\n';
  return kOk;
}

int cmd_forward2d(Run& r) {
  const auto& s = r.cfg.solver;
  const Source2D src = source2d_by_name(r.cfg.source);
  const AxisGrid x = AxisGrid::covering(std::min(s.x_min, -src.r), std::max(s.x_max, src.r), s.dx);
  const auto spec = SourceSpec2D::sample(src, x, r.cfg.material.h, s.section_order);
  Solve2DOptions o;
  o.section_order = s.section_order;
  const Wavefield2D wf = solve2d(spec, r.cfg.frequency.omega, r.cfg.material, s.n_modes,
                                 uniform_depths(r.cfg.material.h, s.nz), o);
  if (wf.truncation_warning) note("last retained mode still carries " + fmt(wf.last_mode_ratio) + " of the field");
  auto os = r.open("field2d.csv");
  write_field_csv(os, wf);
  std::cout << "forward2d: " << wf.n_modes << " modes, last-mode ratio " << fmt(wf.last_mode_ratio) << '\n';
  return kOk;
}

int cmd_forward3d(Run& r) {
  const auto& s = r.cfg.solver;
  const Source3D src = source3d_by_name(r.cfg.source);
  const PlaneGrid plane = centered_plane(s.plane_points, s.plane_half_width);
  const auto t0 = std::chrono::steady_clock::now();
  const Wavefield3D w = solve3d(SourceSpec3D::sample(src, plane, r.cfg.material.h, s.section_order),
                                r.cfg.frequency.omega, r.cfg.material, s.n_modes,
                                uniform_depths(r.cfg.material.h, s.depths - 1));
  auto os = r.open("field3d.bin");
  write_field3d_binary(os, w);
  std::cout << "forward3d: " << plane.x.n << "^2 x " << s.depths << " in " << fmt(since(t0), 3) << " s\n";
  return kOk;
}

int cmd_oracle2d(Run& r) {
  const CompareOptions o = r.cfg.compare_options();
  const FDGrid g = FDGrid::make(o.xa, o.xb, r.cfg.material.h, o.spacing, o.pml);
  const FDSolution s = solve_fd(g, r.cfg.material, r.cfg.frequency.omega, FDSource::from(source2d_by_name(r.cfg.source)));
  auto os = r.open("oracle2d.csv");
  write_fd_csv(os, s);
  std::cout << "oracle2d: " << g.nx() + 1 << " x " << g.nz + 1 << " nodes\n";
  return kOk;
}

nlohmann::json compare_json(const CompareReport& c, const CompareOptions& o) {
  return {{"l2", c.l2},
          {"linf", c.linf},
          {"fd_spacing", o.spacing},
          {"window", o.window},
          {"n_modes", o.n_modes},
          {"seconds_fd", c.seconds_fd},
          {"seconds_modal", c.seconds_modal},
          {"truncation_warning", c.truncation_warning}};
}

int cmd_compare(Run& r) {
  const CompareOptions o = r.cfg.compare_options();
  const CompareReport c = compare_modal_fd(source2d_by_name(r.cfg.source), r.cfg.frequency.omega, r.cfg.material, o);
  auto os = r.open("compare.json");
  os << compare_json(c, o).dump(2) << '\n';
  std::cout << "compare: L2 " << fmt(100 * c.l2, 4) << "%, Linf " << fmt(100 * c.linf, 4) << "% over |x| <= "
            << o.window << '\n';
  return kOk;
}

void report_warnings(const MeasurementSet& m) {
  for (const auto& w : m.warnings) note(w);
}

int cmd_synthesize(Run& r) {
  const auto& y = r.cfg.synthesis;
  const MeasurementSet m = synthesize_measurements(r.cfg.defect_profile(), r.cfg.material,
                                                   frequency_grid(y.omega_max, y.count), r.cfg.synthesis_options());
  report_warnings(m);
  auto os = r.open("measurements.csv");
  write_measurements_csv(os, m);
  std::cout << "synthesize: " << m.traces.size() << " traces, " << m.skipped.size() << " critical skipped\n";
  return kOk;
}

nlohmann::json stability_json(const StabilityReport& s) {
  return {{"lhs", s.lhs}, {"fourier_term", s.fourier_term}, {"tail_term", s.tail_term}, {"M", s.M},
          {"holds", s.holds}, {"slack", s.slack()}};
}

nlohmann::json pipeline_json(const PipelineResult& p) {
  nlohmann::json j = {{"traces", p.measurements.traces.size()},
                      {"skipped_frequencies", p.measurements.skipped},
                      {"rows_used", p.reconstruction.rows_used},
                      {"residual", p.reconstruction.residual},
                      {"xi_max", p.table.xi_max},
                      {"warnings", p.table.warnings}};
  if (p.has_truth) {
    j["relative_l2_error"] = p.error;
    j["stability_g1"] = stability_json(p.stability_g1);
    j["stability_g2"] = stability_json(p.stability_g2);
  }
  return j;
}

int cmd_invert(Run& r, bool case_given) {
  const auto& v = r.cfg.inversion;
  PipelineResult p;
  const DefectProfile truth = r.cfg.defect_profile();
  if (!v.measurements.empty()) {
    std::ifstream in(v.measurements, std::ios::binary);
    if (!in) throw ConfigError(v.measurements, 0, "cannot open measurement file");
    p = invert_measurements(read_measurements_csv(in, v.measurements), r.cfg.material, r.cfg.extraction_options(),
                            r.cfg.inversion_options(), case_given ? &truth : nullptr);
  } else {
    const auto& y = r.cfg.synthesis;
    p = run_pipeline(truth, r.cfg.material, frequency_grid(y.omega_max, y.count), r.cfg.synthesis_options(),
                     r.cfg.extraction_options(), r.cfg.inversion_options());
    report_warnings(p.measurements);
  }
  for (const auto& w : p.table.warnings) note(w);
  {
    auto os = r.open("extraction.csv");
    write_extraction_csv(os, p.table);
  }
  {
    auto os = r.open("reconstruction.csv");
    write_reconstruction_csv(os, p.reconstruction, p.has_truth ? &truth : nullptr);
  }
  {
    auto os = r.open("report.json");
    os << pipeline_json(p).dump(2) << '\n';
  }
  std::cout << "invert: " << p.reconstruction.rows_used << " data rows";
  if (p.has_truth) std::cout << ", relative L2 error " << fmt(100 * p.error, 4) << '%';
  std::cout << '\n';
  return kOk;
}

// ---- paper-repro ----------------------------------------------------------------

struct SummaryRow {
  std::string scenario, metric;
  Real value = 0;
  std::string reference, band;
  bool pass = false;
};

void run_scenario(const std::string& name, Run& r, std::vector<SummaryRow>& rows) {
  const Material mat = r.cfg.material;
  std::cerr << "lambkit: running " << name << '\n';
  if (name == "fig-rgmode") {
    const auto roots = find_roots(1.37, mat, 20);
    Real worst = 0;
    int prop = 0;
    for (const auto& rt : roots) {
      const auto e = dispersion_eval(1.37, rt.k, rt.family, mat);
      worst = std::max(worst, std::abs(e.d) / e.scale);
      prop += rt.kind == ModeKind::Propagative;
    }
    auto os = r.open("rgmode_roots.csv");
    write_atlas_header(os);
    write_atlas_rows(os, roots);
    rows.push_back({name, "max |D|/scale, omega 1.37", worst, "-", "<= 1e-10", worst <= 1e-10});
    rows.push_back({name, "propagative right-going modes", Real(prop), "-", "-", true});
  } else if (name == "zgv") {
    const ZgvPoint z = refine_zgv(13.2, 8.5, ModeFamily::Symmetric, mat);
    const Real vg = group_velocity(z.omega, z.k, ModeFamily::Symmetric, mat);
    rows.push_back({name, "S1 ZGV omega", z.omega, "-", "-", true});
    rows.push_back({name, "|group velocity|", std::abs(vg), "-", "<= 1e-6", std::abs(vg) <= 1e-6});
  } else if (name == "fig-num2d") {
    CompareOptions o = r.cfg.compare_options();
    const CompareReport c = compare_modal_fd(source_e1_e2(), 13.7, mat, o);
    auto os = r.open("num2d_compare.json");
    os << compare_json(c, o).dump(2) << '\n';
    rows.push_back({name, "relative L2 error (%)", 100 * c.l2, "1.4 at finer mesh", "<= 5", c.l2 <= 0.05});
    rows.push_back({name, "relative Linf error (%)", 100 * c.linf, "1.7 at finer mesh", "<= 5", c.linf <= 0.05});
  } else if (name == "fig-3d") {
    Material m3 = mat;
    const PlaneGrid plane = centered_plane(r.cfg.solver.plane_points, r.cfg.solver.plane_half_width);
    const VecR z = uniform_depths(m3.h, r.cfg.solver.depths - 1);
    auto maxabs = [](const std::vector<MatC>& v) {
      Real s = 0;
      for (const auto& a : v) s = std::max(s, a.cwiseAbs().maxCoeff());
      return s;
    };
    auto t0 = std::chrono::steady_clock::now();
    const Wavefield3D w3 = solve3d(SourceSpec3D::sample(source_e3(), plane, m3.h), 10.0, m3, 20, z);
    const Real t3 = since(t0);
    const Real leak3 = std::max(maxabs(w3.u_sh), maxabs(w3.v_sh)) / std::max(maxabs(w3.u), maxabs(w3.v));
    t0 = std::chrono::steady_clock::now();
    const Wavefield3D w4 = solve3d(SourceSpec3D::sample(source_e4(), plane, m3.h), 10.0, m3, 20, z);
    const Real t4 = since(t0);
    Real lamb4 = maxabs(w4.w);
    for (std::size_t i = 0; i < w4.u.size(); ++i)
      lamb4 = std::max({lamb4, (w4.u[i] - w4.u_sh[i]).cwiseAbs().maxCoeff(), (w4.v[i] - w4.v_sh[i]).cwiseAbs().maxCoeff()});
    const Real leak4 = lamb4 / std::max(maxabs(w4.u), maxabs(w4.v));
    rows.push_back({name, "E3 SH leakage", leak3, "-", "<= 1e-8", leak3 <= 1e-8});
    rows.push_back({name, "E4 Lamb leakage", leak4, "-", "<= 1e-8", leak4 <= 1e-8});
    rows.push_back({name, "E3 + E4 runtime (s)", t3 + t4, "-", "<= 900", t3 + t4 <= 900});
  } else if (name == "e5" || name == "e6") {
    RunConfig c = r.cfg;
    c.defect.kind = name;
    c.synthesis.path = "born";
    const PipelineResult p = run_pipeline(c.defect_profile(), mat, frequency_grid(17, 170), c.synthesis_options(),
                                          c.extraction_options(), c.inversion_options());
    auto os = r.open(name + "_reconstruction.csv");
    const DefectProfile t = c.defect_profile();
    write_reconstruction_csv(os, p.reconstruction, &t);
    rows.push_back({name, "relative L2 error (%)", 100 * p.error, name == "e5" ? "4.7" : "5.1", "<= 10", p.error <= 0.10});
    const bool st = p.stability_g1.holds && p.stability_g2.holds;
    rows.push_back({name, "stability inequality holds", Real(st), "-", "1", st});
  } else if (name == "table-amp") {
    const Real amps[] = {0.1, 0.2, 0.3, 0.5}, ref[] = {4.5, 6.4, 9.2, 18.3};
    Real prev = 0;
    bool mono = true;
    for (int i = 0; i < 4; ++i) {
      RunConfig c = r.cfg;
      c.defect.kind = "amplitude";
      c.defect.amplitude = amps[i];
      c.synthesis.path = "oracle";
      const PipelineResult p = run_pipeline(c.defect_profile(), mat, frequency_grid(17, 170), c.synthesis_options(),
                                            c.extraction_options(), c.inversion_options());
      const Real e = 100 * p.error;
      mono = mono && e > prev;
      prev = e;
      rows.push_back({name, "A = " + fmt(amps[i]) + " error (%)", e, fmt(ref[i]), "+-4", std::abs(e - ref[i]) <= 4});
    }
    rows.push_back({name, "monotone in A", Real(mono), "-", "1", mono});
  } else {
    throw ConfigError("--case", 0, "unknown scenario '" + name + "'");
  }
}

int cmd_paper_repro(Run& r, const std::string& kase) {
  const std::vector<std::string> core = {"fig-rgmode", "zgv", "fig-num2d", "fig-3d", "e5", "e6"};
  std::vector<std::string> todo;
  if (kase.empty() || kase == "core") {
    todo = core;
  } else if (kase == "all") {
    todo = core;
    todo.push_back("table-amp");
  } else {
    todo = {kase};
  }
  std::vector<SummaryRow> rows;
  for (const auto& n : todo) run_scenario(n, r, rows);

  auto os = r.open("summary.csv");
  os << "scenario,metric,value,reference,band,pass\n" << std::setprecision(10);
  std::cout << std::left << std::setw(11) << "scenario" << std::setw(34) << "metric" << std::setw(14) << "value"
            << std::setw(20) << "reference" << std::setw(10) << "band" << "status\n";
  bool all = true;
  for (const auto& row : rows) {
    os << row.scenario << ',' << row.metric << ',' << row.value << ',' << row.reference << ',' << row.band << ','
       << (row.pass ? 1 : 0) << '\n';
    std::cout << std::setw(11) << row.scenario << std::setw(34) << row.metric << std::setw(14) << fmt(row.value, 5)
              << std::setw(20) << row.reference << std::setw(10) << row.band << (row.pass ? "ok" : "OUT OF BAND")
              << '\n';
    all = all && row.pass;
  }
  if (!all) note("some scenarios are outside their bands; see summary.csv");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lambkit: Lamb-wave modal solvers, FD oracle and defect inversion"};
  app.require_subcommand(1);
  Flags flags;
  auto common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON configuration file (docs/config.md)")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", flags.out_dir, "output directory (overrides out_dir)");
    sub->add_option("--threads", flags.threads, "worker threads for frequency sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "noise seed (overrides synthesis.seed)");
    sub->add_option("--case", flags.kase, "named scenario or source/defect selection");
    return sub;
  };
  const std::vector<std::pair<const char*, const char*>> cmds = {
      {"dispersion", "dispersion atlas CSV over an omega range"},
      {"modes", "mode profiles at one frequency"},
      {"forward2d", "2D modal field of a source"},
      {"forward3d", "3D modal field of a source"},
      {"oracle2d", "finite-difference field of a 2D source"},
      {"compare", "modal vs finite-difference error report"},
      {"synthesize", "surface measurements of a defect"},
      {"invert", "defect reconstruction from measurements"},
      {"paper-repro", "reference scenarios with a summary table"},
  };
  for (const auto& [n, d] : cmds) common(app.add_subcommand(n, d));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    Run r;
    if (!flags.config.empty()) {
      std::ifstream in(flags.config, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      r.config_text = ss.str();
      r.cfg = parse_config(r.config_text, flags.config);
    }
    if (!flags.out_dir.empty()) r.cfg.out_dir = flags.out_dir;
    if (flags.threads) r.cfg.threads = *flags.threads;
    if (flags.seed) r.cfg.synthesis.seed = *flags.seed;
    if (!flags.kase.empty()) {
      if (cmd == "forward2d" || cmd == "forward3d" || cmd == "oracle2d" || cmd == "compare")
        r.cfg.source = flags.kase;
      else if (cmd == "synthesize" || cmd == "invert")
        apply_defect_case(r.cfg, flags.kase);
      else if (cmd != "paper-repro")
        throw ConfigError("--case", 0, "not used by '" + cmd + "'");
    }
    r.dir = r.cfg.out_dir;
    fs::create_directories(r.dir);

    int rc = kOk;
    if (cmd == "dispersion") rc = cmd_dispersion(r);
    else if (cmd == "modes") rc = cmd_modes(r);
    else if (cmd == "forward2d") rc = cmd_forward2d(r);
    else if (cmd == "forward3d") rc = cmd_forward3d(r);
    else if (cmd == "oracle2d") rc = cmd_oracle2d(r);
    else if (cmd == "compare") rc = cmd_compare(r);
    else if (cmd == "synthesize") rc = cmd_synthesize(r);
    else if (cmd == "invert") rc = cmd_invert(r, !flags.kase.empty());
    else rc = cmd_paper_repro(r, flags.kase);
    write_manifest(r.dir, cmd, r.cfg, r.config_text, r.outputs);
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const CriticalFrequency& e) {
    std::cerr << "critical frequency: " << e.what() << '\n';
    return kCritical;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << " (condition estimate " << e.condition_estimate << ")\n";
    return kSolver;
  } catch (const SingularArgument& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
