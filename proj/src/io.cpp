#include "lamb/io.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace lamb {

using nlohmann::json;

ConfigError::ConfigError(const std::string& src, int ln, const std::string& msg)
    : std::runtime_error(src + (ln > 0 ? ":" + std::to_string(ln) : std::string()) + ": " + msg),
      source(src),
      line(ln) {}

namespace {

int line_at(const std::string& text, std::size_t pos) {
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(pos, text.size())), '\n'));
}

/// Line of the key at `path`, found by walking quoted keys in order. Keys are
/// unique per object after a successful parse, so the first match below the
/// parent position is the right one.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const std::string quoted = '"' + key + '"';
    std::size_t hit = pos;
    for (;;) {
      hit = text.find(quoted, hit);
      if (hit == std::string::npos) return pos ? line_at(text, pos) : 0;
      std::size_t after = hit + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      hit += quoted.size();
    }
    pos = hit;
  }
  return line_at(text, pos);
}

std::string join(const std::vector<std::string>& path) {
  std::string s;
  for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
  return s;
}

struct Parser {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    throw ConfigError(source, line_of(text, path), join(path) + ": " + msg);
  }

  using Binder = std::map<std::string, std::function<void(const json&, const std::vector<std::string>&)>>;

  auto real(Real& out) const {
    return [this, &out](const json& j, const std::vector<std::string>& p) {
      if (!j.is_number()) fail(p, "expected a number");
      out = j.get<Real>();
      if (!std::isfinite(out)) fail(p, "value must be finite");
    };
  }
  auto integer(int& out) const {
    return [this, &out](const json& j, const std::vector<std::string>& p) {
      if (!j.is_number_integer()) fail(p, "expected an integer");
      const auto v = j.get<long long>();
      if (v < -1000000000LL || v > 1000000000LL) fail(p, "integer out of range");
      out = static_cast<int>(v);
    };
  }
  auto unsigned64(std::uint64_t& out) const {
    return [this, &out](const json& j, const std::vector<std::string>& p) {
      if (!j.is_number_unsigned()) fail(p, "expected a non-negative integer");
      out = j.get<std::uint64_t>();
    };
  }
  auto string(std::string& out) const {
    return [this, &out](const json& j, const std::vector<std::string>& p) {
      if (!j.is_string()) fail(p, "expected a string");
      out = j.get<std::string>();
    };
  }
  auto block(Binder b) const {
    return [this, b = std::move(b)](const json& j, const std::vector<std::string>& p) { apply(j, b, p); };
  }

  void apply(const json& j, const Binder& b, const std::vector<std::string>& path) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
      auto p = path;
      p.push_back(key);
      const auto it = b.find(key);
      if (it == b.end()) {
        std::string known;
        for (const auto& [k, _] : b) known += (known.empty() ? "" : ", ") + k;
        fail(p, "unknown key (allowed: " + known + ")");
      }
      it->second(value, p);
    }
  }
};

void one_of(const Parser& ps, const std::string& v, std::initializer_list<const char*> allowed,
            const std::vector<std::string>& path) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  ps.fail(path, "'" + v + "' is not one of " + list);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is 1-based and points just past the offending character
    const std::size_t pos = e.byte > 0 ? e.byte - 1 : 0;
    std::string what = e.what();
    if (const auto c = what.find("syntax error"); c != std::string::npos) what = what.substr(c);
    throw ConfigError(source, line_at(text, pos), what);
  }

  RunConfig c;
  const Parser ps{text, source};
  auto& m = c.material;
  auto& f = c.frequency;
  auto& s = c.solver;
  auto& d = c.defect;
  auto& y = c.synthesis;
  auto& v = c.inversion;
  const Parser::Binder root{
      {"material", ps.block({{"lambda", ps.real(m.lambda)}, {"mu", ps.real(m.mu)}, {"h", ps.real(m.h)}})},
      {"frequency", ps.block({{"omega", ps.real(f.omega)},
                              {"omega_min", ps.real(f.omega_min)},
                              {"omega_max", ps.real(f.omega_max)},
                              {"steps", ps.integer(f.steps)}})},
      {"solver", ps.block({{"n_modes", ps.integer(s.n_modes)},
                           {"section_order", ps.integer(s.section_order)},
                           {"nz", ps.integer(s.nz)},
                           {"dx", ps.real(s.dx)},
                           {"x_min", ps.real(s.x_min)},
                           {"x_max", ps.real(s.x_max)},
                           {"fd_spacing", ps.real(s.fd_spacing)},
                           {"fd_x_min", ps.real(s.fd_x_min)},
                           {"fd_x_max", ps.real(s.fd_x_max)},
                           {"pml_left", ps.real(s.pml_left)},
                           {"pml_right", ps.real(s.pml_right)},
                           {"pml_slope", ps.real(s.pml_slope)},
                           {"window", ps.real(s.window)},
                           {"plane_points", ps.integer(s.plane_points)},
                           {"plane_half_width", ps.real(s.plane_half_width)},
                           {"depths", ps.integer(s.depths)}})},
      {"source", ps.string(c.source)},
      {"defect", ps.block({{"kind", ps.string(d.kind)}, {"amplitude", ps.real(d.amplitude)}})},
      {"synthesis", ps.block({{"path", ps.string(y.path)},
                              {"omega_max", ps.real(y.omega_max)},
                              {"count", ps.integer(y.count)},
                              {"noise", ps.real(y.noise)},
                              {"seed", ps.unsigned64(y.seed)},
                              {"window_left", ps.real(y.window_left)},
                              {"window_right", ps.real(y.window_right)},
                              {"spacing", ps.real(y.spacing)}})},
      {"inversion", ps.block({{"method", ps.string(v.method)},
                              {"reg", ps.real(v.reg)},
                              {"support_left", ps.real(v.support_left)},
                              {"support_right", ps.real(v.support_right)},
                              {"node_spacing", ps.real(v.node_spacing)},
                              {"robust_iterations", ps.integer(v.robust_iterations)},
                              {"min_xi_fraction", ps.real(v.min_xi_fraction)},
                              {"measurements", ps.string(v.measurements)}})},
      {"out_dir", ps.string(c.out_dir)},
      {"threads", ps.integer(c.threads)},
  };
  ps.apply(j, root, {});

  auto need = [&](bool ok, std::vector<std::string> path, const std::string& msg) {
    if (!ok) ps.fail(path, msg);
  };
  need(m.mu > 0, {"material", "mu"}, "must be positive");
  need(m.lambda + 2 * m.mu > 0, {"material", "lambda"}, "lambda + 2 mu must be positive");
  need(m.h > 0, {"material", "h"}, "must be positive");
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    ps.fail({"material"}, e.what());
  }
  need(f.omega > 0, {"frequency", "omega"}, "must be positive");
  need(f.omega_min > 0, {"frequency", "omega_min"}, "must be positive");
  need(f.omega_max > f.omega_min, {"frequency", "omega_max"}, "must exceed omega_min");
  need(f.steps >= 1, {"frequency", "steps"}, "must be at least 1");

  need(s.n_modes >= 1 && s.n_modes <= 400, {"solver", "n_modes"}, "must lie in [1, 400]");
  need(s.section_order >= 2, {"solver", "section_order"}, "must be at least 2");
  need(s.nz >= 1, {"solver", "nz"}, "must be at least 1");
  need(s.dx > 0, {"solver", "dx"}, "must be positive");
  need(s.x_max > s.x_min, {"solver", "x_max"}, "must exceed x_min");
  need(s.fd_spacing > 0, {"solver", "fd_spacing"}, "must be positive");
  {
    const Real nz = 2 * m.h / s.fd_spacing;
    need(std::abs(nz - std::round(nz)) < 1e-8 * nz, {"solver", "fd_spacing"}, "must divide the thickness 2h");
    const Real nx = (s.fd_x_max - s.fd_x_min) / s.fd_spacing;
    need(std::abs(nx - std::round(nx)) < 1e-8 * nx, {"solver", "fd_spacing"}, "must divide fd_x_max - fd_x_min");
  }
  need(s.fd_x_max > s.fd_x_min, {"solver", "fd_x_max"}, "must exceed fd_x_min");
  need(s.pml_left > s.fd_x_min && s.pml_right < s.fd_x_max && s.pml_left < s.pml_right, {"solver", "pml_left"},
       "absorbing layers must start inside the FD strip");
  need(s.pml_slope > 0, {"solver", "pml_slope"}, "must be positive");
  need(s.window > 0 && -s.window > s.pml_left && s.window < s.pml_right, {"solver", "window"},
       "must be positive and end before the absorbing layers");
  need(s.plane_points >= 8, {"solver", "plane_points"}, "must be at least 8");
  need(s.plane_half_width > 0, {"solver", "plane_half_width"}, "must be positive");
  need(s.depths >= 2, {"solver", "depths"}, "must be at least 2");

  one_of(ps, c.source, {"e1", "e2", "e1e2", "e3", "e4"}, {"source"});
  one_of(ps, d.kind, {"e5", "e6", "amplitude"}, {"defect", "kind"});
  need(d.amplitude >= 0, {"defect", "amplitude"}, "must be non-negative");

  one_of(ps, y.path, {"born", "oracle"}, {"synthesis", "path"});
  need(y.omega_max > 0, {"synthesis", "omega_max"}, "must be positive");
  need(y.count >= 1, {"synthesis", "count"}, "must be at least 1");
  need(y.noise >= 0, {"synthesis", "noise"}, "must be non-negative");
  need(y.window_right > y.window_left, {"synthesis", "window_right"}, "must exceed window_left");
  need(y.window_right <= v.support_left, {"synthesis", "window_right"}, "window must lie left of the defect support");
  need(y.spacing > 0, {"synthesis", "spacing"}, "must be positive");

  one_of(ps, v.method, {"ls", "fft"}, {"inversion", "method"});
  need(v.reg >= 0, {"inversion", "reg"}, "must be non-negative");
  need(v.support_right > v.support_left, {"inversion", "support_right"}, "must exceed support_left");
  need(v.node_spacing > 0 && v.node_spacing < v.support_right - v.support_left, {"inversion", "node_spacing"},
       "must be positive and shorter than the support");
  need(v.robust_iterations >= 0, {"inversion", "robust_iterations"}, "must be non-negative");
  need(v.min_xi_fraction >= 0 && v.min_xi_fraction < 1, {"inversion", "min_xi_fraction"}, "must lie in [0, 1)");

  need(!c.out_dir.empty(), {"out_dir"}, "must not be empty");
  need(c.threads >= 1, {"threads"}, "must be at least 1");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "cannot open configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_to_json(const RunConfig& c) {
  const auto& s = c.solver;
  const auto& y = c.synthesis;
  const auto& v = c.inversion;
  json j = {
      {"material", {{"lambda", c.material.lambda}, {"mu", c.material.mu}, {"h", c.material.h}}},
      {"frequency",
       {{"omega", c.frequency.omega},
        {"omega_min", c.frequency.omega_min},
        {"omega_max", c.frequency.omega_max},
        {"steps", c.frequency.steps}}},
      {"solver",
       {{"n_modes", s.n_modes},       {"section_order", s.section_order},
        {"nz", s.nz},                 {"dx", s.dx},
        {"x_min", s.x_min},           {"x_max", s.x_max},
        {"fd_spacing", s.fd_spacing}, {"fd_x_min", s.fd_x_min},
        {"fd_x_max", s.fd_x_max},     {"pml_left", s.pml_left},
        {"pml_right", s.pml_right},   {"pml_slope", s.pml_slope},
        {"window", s.window},         {"plane_points", s.plane_points},
        {"plane_half_width", s.plane_half_width}, {"depths", s.depths}}},
      {"source", c.source},
      {"defect", {{"kind", c.defect.kind}, {"amplitude", c.defect.amplitude}}},
      {"synthesis",
       {{"path", y.path},
        {"omega_max", y.omega_max},
        {"count", y.count},
        {"noise", y.noise},
        {"seed", y.seed},
        {"window_left", y.window_left},
        {"window_right", y.window_right},
        {"spacing", y.spacing}}},
      {"inversion",
       {{"method", v.method},
        {"reg", v.reg},
        {"support_left", v.support_left},
        {"support_right", v.support_right},
        {"node_spacing", v.node_spacing},
        {"robust_iterations", v.robust_iterations},
        {"min_xi_fraction", v.min_xi_fraction},
        {"measurements", v.measurements}}},
      {"out_dir", c.out_dir},
      {"threads", c.threads},
  };
  return j.dump(2);
}

SynthesisOptions RunConfig::synthesis_options() const {
  SynthesisOptions o;
  o.path = synthesis.path == "oracle" ? SynthesisPath::Oracle : SynthesisPath::Born;
  o.window_left = synthesis.window_left;
  o.window_right = synthesis.window_right;
  o.spacing = synthesis.spacing;
  o.noise = synthesis.noise;
  o.seed = synthesis.seed;
  o.n_modes = solver.n_modes;
  o.support_left = inversion.support_left;
  o.support_right = inversion.support_right;
  o.threads = threads;
  return o;
}

ExtractionOptions RunConfig::extraction_options() const {
  ExtractionOptions o;
  o.method = inversion.method == "fft" ? ExtractionMethod::FftPeak : ExtractionMethod::LeastSquares;
  o.n_modes = solver.n_modes;
  o.min_xi_fraction = inversion.min_xi_fraction;
  return o;
}

InversionOptions RunConfig::inversion_options() const {
  InversionOptions o;
  o.support_left = inversion.support_left;
  o.support_right = inversion.support_right;
  o.node_spacing = inversion.node_spacing;
  o.reg = inversion.reg;
  o.robust_iterations = inversion.robust_iterations;
  return o;
}

CompareOptions RunConfig::compare_options() const {
  CompareOptions o;
  o.n_modes = solver.n_modes;
  o.spacing = solver.fd_spacing;
  o.window = solver.window;
  o.xa = solver.fd_x_min;
  o.xb = solver.fd_x_max;
  o.pml = PMLProfile{solver.pml_left, solver.pml_right, solver.pml_slope};
  return o;
}

DefectProfile RunConfig::defect_profile() const {
  if (defect.kind == "e6") return defect_e6();
  if (defect.kind == "amplitude") return defect_amplitude(defect.amplitude);
  return defect_e5();
}

Source2D source2d_by_name(const std::string& name) {
  if (name == "e1") return source_e1();
  if (name == "e2") return source_e2();
  if (name == "e1e2") return source_e1_e2();
  throw InvalidArgument("no 2D source named '" + name + "' (e1, e2, e1e2)");
}

Source3D source3d_by_name(const std::string& name) {
  if (name == "e3") return source_e3();
  if (name == "e4") return source_e4();
  throw InvalidArgument("no 3D source named '" + name + "' (e3, e4)");
}

// ---- result files -----------------------------------------------------------

void write_fd_csv(std::ostream& os, const FDSolution& s) {
  os << "x,z,re_u,im_u,re_v,im_v\n" << std::setprecision(17);
  for (int i = 0; i <= s.grid.nx(); ++i)
    for (int j = 0; j <= s.grid.nz; ++j)
      os << s.grid.x(i) << ',' << s.grid.z(i, j) << ',' << s.u(i, j).real() << ',' << s.u(i, j).imag() << ','
         << s.v(i, j).real() << ',' << s.v(i, j).imag() << '\n';
}

void write_measurements_csv(std::ostream& os, const MeasurementSet& m) {
  os << "omega,x,re_u,im_u\n" << std::setprecision(17);
  for (const Trace& t : m.traces)
    for (Eigen::Index i = 0; i < t.x.size(); ++i)
      os << t.omega << ',' << t.x(i) << ',' << t.u(i).real() << ',' << t.u(i).imag() << '\n';
}

MeasurementSet read_measurements_csv(std::istream& is, const std::string& source) {
  std::string line;
  int ln = 0;
  std::map<std::string, int> col;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string name;
    for (int c = 0; std::getline(ss, name, ','); ++c) {
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
      col[name] = c;
    }
    break;
  }
  for (const char* k : {"omega", "x", "re_u", "im_u"})
    if (!col.count(k)) throw ConfigError(source, ln, std::string("missing column '") + k + "'");

  std::map<Real, std::vector<std::pair<Real, Complex>>> rows;
  std::vector<Real> cells;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    cells.clear();
    const char* p = line.c_str();
    for (;;) {
      char* end = nullptr;
      const Real val = std::strtod(p, &end);
      if (end == p) throw ConfigError(source, ln, "malformed number");
      cells.push_back(val);
      p = end;
      while (*p == ' ' || *p == '\r') ++p;
      if (*p == '\0') break;
      if (*p != ',') throw ConfigError(source, ln, "expected ','");
      ++p;
    }
    if (cells.size() < col.size()) throw ConfigError(source, ln, "too few columns");
    const Real w = cells[col["omega"]];
    if (!(w > 0)) throw ConfigError(source, ln, "omega must be positive");
    rows[w].emplace_back(cells[col["x"]], Complex(cells[col["re_u"]], cells[col["im_u"]]));
  }
  if (rows.empty()) throw ConfigError(source, ln, "no measurement rows");

  MeasurementSet m;
  for (auto& [w, pts] : rows) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Trace t;
    t.omega = w;
    t.x.resize(static_cast<Eigen::Index>(pts.size()));
    t.u.resize(t.x.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.x(static_cast<Eigen::Index>(i)) = pts[i].first;
      t.u(static_cast<Eigen::Index>(i)) = pts[i].second;
    }
    m.traces.push_back(std::move(t));
  }
  return m;
}

void write_extraction_csv(std::ostream& os, const ExtractionTable& t) {
  os << "mode,omega,xi,re_d,im_d,re_c1,im_c1,re_c2,im_c2,used,flag\n" << std::setprecision(17);
  for (const ExtractionRow& r : t.rows)
    os << r.mode << ',' << r.omega << ',' << r.xi << ',' << r.datum.real() << ',' << r.datum.imag() << ','
       << r.c1.real() << ',' << r.c1.imag() << ',' << r.c2.real() << ',' << r.c2.imag() << ','
       << (r.dropped ? 0 : 1) << ',' << r.flag << '\n';
}

void write_reconstruction_csv(std::ostream& os, const Reconstruction& r, const DefectProfile* truth) {
  os << (truth ? "x,g1,g2,g1_true,g2_true\n" : "x,g1,g2\n") << std::setprecision(17);
  for (Eigen::Index i = 0; i < r.g1.x.n; ++i) {
    const Real x = r.g1.x.at(i);
    os << x << ',' << r.g1.g(i) << ',' << r.g2.g(i);
    if (truth) os << ',' << truth->g1_at(x) << ',' << truth->g2_at(x);
    os << '\n';
  }
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::string& config_text, const std::vector<std::string>& outputs) {
  json files = json::array();
  for (const auto& name : outputs) {
    std::ifstream in(dir / name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files.push_back({{"file", name}, {"fnv1a64", content_hash(ss.str())}});
  }
  const std::string params = config_to_json(cfg);
  json j = {
      {"command", command},
      {"version", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
      {"config_hash", content_hash(config_text)},
      {"inputs_hash", content_hash(command + '\n' + params)},
      {"parameters", json::parse(params)},
      {"outputs", files},
  };
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

}  // namespace lamb
