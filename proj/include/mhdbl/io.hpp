#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/fields.hpp"
#include "mhdbl/manufactured.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/solver_primal.hpp"

namespace mhdbl {

class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& msg)
      : Error(source + ":" + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Scenario

struct Scenario {
  std::string preset = "stability-demo";
  int nx = 64, ny = 257;
  double y_max = 12.0;
  double x_period = 2.0 * std::numbers::pi;
  double r0 = 1.0;
  std::string trace_family = "constant";
  std::map<std::string, double> trace_params{{"U0", 1.0}, {"H0", 1.0}};
  std::string initial_family = "nonmonotone-shear";
  std::map<std::string, double> initial_params;
  SolverConfig solver;
  int snapshot_every = 0;  // in samples; 0 = initial and final only
  std::uint64_t seed = 0;
  std::vector<double> eps_values{1e-2, 1e-3, 1e-4};
  double perturbation = 1e-3;
  int n_eta = 0;  // 0 = ny
  std::vector<double> checkpoints{0.25, 0.5};

  Grid2D grid() const { return build_grid(nx, ny, y_max, x_period); }
  Cutoff cutoff() const { return Cutoff(r0); }
  OuterFlow outer_flow() const { return make_outer_flow(trace_family, trace_params); }
  bool manufactured() const { return initial_family == "manufactured"; }

  ManufacturedPrimal manufactured_pair() const {
    ManufacturedPrimal m;
    auto get = [&](const char* k, double d) {
      auto it = initial_params.find(k);
      return it == initial_params.end() ? d : it->second;
    };
    m.amp = get("amp", m.amp);
    m.c = get("c", m.c);
    m.h_inf = get("h_inf", m.h_inf);
    return m;
  }

  State initial_state() const {
    const Grid2D g = grid();
    if (manufactured()) return manufactured_pair().sample(0.0, g);
    return make_initial(initial_family, initial_params, cutoff(), g);
  }

  /// Multiplies nx and ny - 1 by s; fixed steps shrink by s and the sample
  /// cadence grows by s so samples stay at the same times.
  Scenario scaled(int s) const {
    if (s < 1) throw InvalidArgument("resolution scale must be >= 1");
    Scenario out = *this;
    out.nx = nx * s;
    out.ny = (ny - 1) * s + 1;
    if (n_eta > 0) out.n_eta = (n_eta - 1) * s + 1;
    if (solver.fixed_dt) {
      out.solver.dt = solver.dt / s;
      out.solver.sample_every = solver.sample_every * s;
    }
    return out;
  }

  /// Invariant violations; empty when the scenario is usable.
  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    auto check = [&](bool ok, const std::string& msg) {
      if (!ok) v.push_back(msg);
    };
    check(nx >= 8 && nx % 2 == 0, "grid.nx must be even and >= 8");
    check(ny >= 8, "grid.ny must be >= 8");
    check(y_max > 0.0, "grid.y_max must be > 0");
    check(x_period > 0.0, "grid.x_period must be > 0");
    check(r0 > 0.0 && y_max >= 4.0 * r0, "cutoff.r0 must be > 0 with grid.y_max >= 4 r0");
    check(solver.thresholds.delta0 > 0.0, "thresholds.delta0 must be > 0");
    check(solver.thresholds.l >= 0.0, "thresholds.l must be >= 0");
    check(solver.mu > 0.0, "solver.mu must be > 0");
    check(solver.kappa > 0.0, "solver.kappa must be > 0");
    check(solver.eps >= 0.0, "solver.eps must be >= 0");
    check(solver.dt > 0.0, "solver.dt must be > 0");
    check(solver.t_end >= 0.0, "solver.t_end must be >= 0");
    check(solver.cfl > 0.0 && solver.cfl <= 0.9, "solver.cfl must be in (0, 0.9]");
    check(solver.corrector_order == 0 || solver.corrector_order == 1, "solver.corrector_order must be 0 or 1");
    check(solver.monitor_m >= 0 && solver.monitor_m <= 3, "monitor.m must be in 0..3");
    check(solver.sample_every >= 1, "monitor.sample_every must be >= 1");
    check(solver.max_steps >= 1, "solver.max_steps must be >= 1");
    check(snapshot_every >= 0, "output.snapshot_every must be >= 0");
    check(perturbation >= 0.0, "uniqueness.d must be >= 0");
    check(n_eta == 0 || n_eta >= 8, "crocco.n_eta must be 0 or >= 8");
    for (double e : eps_values) check(e > 0.0, "epsilon.values must be > 0");
    for (std::size_t k = 1; k < checkpoints.size(); ++k)
      check(checkpoints[k] > checkpoints[k - 1], "crocco.checkpoints must be increasing");
    try {
      (void)outer_flow();
    } catch (const InvalidArgument& e) {
      v.push_back(e.what());
    }
    static const char* kFamilies[] = {"zero", "monotone-shear", "nonmonotone-shear", "no-magnetic",
                                      "manufactured"};
    if (std::find(std::begin(kFamilies), std::end(kFamilies), initial_family) == std::end(kFamilies))
      v.push_back("unknown initial-data family '" + initial_family + "'");
    return v;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid scenario:";
    for (const auto& s : v) msg += "\n  " + s;
    throw InvalidArgument(msg);
  }

  bool operator==(const Scenario&) const;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"stability-demo", "no-magnetic",  "epsilon-family",
                                              "manufactured",   "crocco-validate", "uniqueness", "zero"};
  return names;
}

inline Scenario make_preset(const std::string& name) {
  Scenario s;
  s.preset = name;
  s.solver.sample_every = 10;
  if (name == "stability-demo") return s;
  if (name == "no-magnetic") {
    s.trace_params = {{"U0", 1.0}, {"H0", 0.0}};
    s.initial_family = "no-magnetic";
    s.solver.enforce_positivity = false;
    return s;
  }
  if (name == "epsilon-family") {
    s.solver.t_end = 0.5;
    return s;
  }
  if (name == "manufactured") {
    s.nx = 32;
    s.ny = 97;
    s.trace_family = "steady-harmonic";
    s.trace_params = {{"u0", 1.0}, {"a", 0.2}, {"c", 1.0}};
    s.initial_family = "manufactured";
    s.solver.monitor_m = 0;
    s.solver.fixed_dt = true;
    s.solver.dt = 1e-2;
    s.solver.t_end = 0.4;
    s.solver.sample_every = 1;
    return s;
  }
  if (name == "crocco-validate") {
    s.solver.t_end = 0.5;
    return s;
  }
  if (name == "uniqueness") {
    s.solver.t_end = 0.5;
    s.solver.fixed_dt = true;
    s.solver.dt = 5e-3;
    s.solver.sample_every = 2;
    return s;
  }
  if (name == "zero") {
    s.trace_params = {{"U0", 0.0}, {"H0", 0.0}};
    s.initial_family = "zero";
    s.solver.enforce_positivity = false;
    s.solver.t_end = 0.5;
    return s;
  }
  throw InvalidArgument("unknown preset '" + name + "'");
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw InvalidArgument("expected a number, got '" + v + "'");
  return out;
}

inline long parse_long(const std::string& v) {
  long out = 0;
  const char* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw InvalidArgument("expected an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt_double(v[k]);
  return s;
}

inline void apply_key(Scenario& s, const std::string& key, const std::string& v) {
  auto& c = s.solver;
  if (key == "grid.nx") s.nx = int(parse_long(v));
  else if (key == "grid.ny") s.ny = int(parse_long(v));
  else if (key == "grid.y_max") s.y_max = parse_double(v);
  else if (key == "grid.x_period") s.x_period = parse_double(v);
  else if (key == "cutoff.r0") s.r0 = parse_double(v);
  else if (key == "trace.family") {
    s.trace_family = v;
    s.trace_params.clear();
  } else if (key.rfind("trace.", 0) == 0) s.trace_params[key.substr(6)] = parse_double(v);
  else if (key == "initial.family") {
    s.initial_family = v;
    s.initial_params.clear();
  } else if (key.rfind("initial.", 0) == 0) s.initial_params[key.substr(8)] = parse_double(v);
  else if (key == "thresholds.delta0") c.thresholds.delta0 = parse_double(v);
  else if (key == "thresholds.l") c.thresholds.l = parse_double(v);
  else if (key == "solver.mu") c.mu = parse_double(v);
  else if (key == "solver.kappa") c.kappa = parse_double(v);
  else if (key == "solver.eps") c.eps = parse_double(v);
  else if (key == "solver.dt") c.dt = parse_double(v);
  else if (key == "solver.fixed_dt") c.fixed_dt = parse_bool(v);
  else if (key == "solver.t_end") c.t_end = parse_double(v);
  else if (key == "solver.cfl") c.cfl = parse_double(v);
  else if (key == "solver.scheme") c.scheme = parse_scheme(v);
  else if (key == "solver.corrector_order") c.corrector_order = int(parse_long(v));
  else if (key == "solver.enforce_positivity") c.enforce_positivity = parse_bool(v);
  else if (key == "solver.max_steps") c.max_steps = parse_long(v);
  else if (key == "monitor.m") c.monitor_m = int(parse_long(v));
  else if (key == "monitor.sample_every") c.sample_every = int(parse_long(v));
  else if (key == "output.snapshot_every") s.snapshot_every = int(parse_long(v));
  else if (key == "seed") {
    const long x = parse_long(v);
    if (x < 0) throw InvalidArgument("seed must be >= 0");
    s.seed = std::uint64_t(x);
  } else if (key == "epsilon.values") s.eps_values = parse_list(v);
  else if (key == "uniqueness.d") s.perturbation = parse_double(v);
  else if (key == "crocco.n_eta") s.n_eta = int(parse_long(v));
  else if (key == "crocco.checkpoints") s.checkpoints = parse_list(v);
  else throw InvalidArgument("unknown key '" + key + "'");
}

}  // namespace detail

/// key = value lines; '#' starts a comment. An optional `preset = <name>`
/// must precede every other key and selects the defaults.
inline Scenario parse_scenario(std::istream& in, const std::string& source = "<scenario>") {
  Scenario s = make_preset("stability-demo");
  std::string line;
  int n = 0;
  bool seen_other = false;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, n, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, n, "empty key");
    if (val.empty()) throw ParseError(source, n, "empty value for '" + key + "'");
    try {
      if (key == "preset") {
        if (seen_other) throw InvalidArgument("preset must come before other keys");
        s = make_preset(val);
      } else {
        seen_other = true;
        detail::apply_key(s, key, val);
      }
    } catch (const InvalidArgument& e) {
      throw ParseError(source, n, e.what());
    }
  }
  const auto v = s.violations();
  if (!v.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& m : v) msg += "\n  " + m;
    throw InvalidArgument(source + ": " + msg);
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  return parse_scenario(in, path.string());
}

/// Every resolved value, in a form parse_scenario reads back exactly.
inline std::string format_scenario(const Scenario& s) {
  using detail::fmt_double;
  std::ostringstream o;
  const auto& c = s.solver;
  o << "# resolved scenario\n";
  o << "preset = " << s.preset << "\n";
  o << "grid.nx = " << s.nx << "\n";
  o << "grid.ny = " << s.ny << "\n";
  o << "grid.y_max = " << fmt_double(s.y_max) << "\n";
  o << "grid.x_period = " << fmt_double(s.x_period) << "\n";
  o << "cutoff.r0 = " << fmt_double(s.r0) << "\n";
  o << "trace.family = " << s.trace_family << "\n";
  for (const auto& [k, v] : s.trace_params) o << "trace." << k << " = " << fmt_double(v) << "\n";
  o << "initial.family = " << s.initial_family << "\n";
  for (const auto& [k, v] : s.initial_params) o << "initial." << k << " = " << fmt_double(v) << "\n";
  o << "thresholds.delta0 = " << fmt_double(c.thresholds.delta0) << "\n";
  o << "thresholds.l = " << fmt_double(c.thresholds.l) << "\n";
  o << "solver.mu = " << fmt_double(c.mu) << "\n";
  o << "solver.kappa = " << fmt_double(c.kappa) << "\n";
  o << "solver.eps = " << fmt_double(c.eps) << "\n";
  o << "solver.dt = " << fmt_double(c.dt) << "\n";
  o << "solver.fixed_dt = " << (c.fixed_dt ? "true" : "false") << "\n";
  o << "solver.t_end = " << fmt_double(c.t_end) << "\n";
  o << "solver.cfl = " << fmt_double(c.cfl) << "\n";
  o << "solver.scheme = " << to_string(c.scheme) << "\n";
  o << "solver.corrector_order = " << c.corrector_order << "\n";
  o << "solver.enforce_positivity = " << (c.enforce_positivity ? "true" : "false") << "\n";
  o << "solver.max_steps = " << c.max_steps << "\n";
  o << "monitor.m = " << c.monitor_m << "\n";
  o << "monitor.sample_every = " << c.sample_every << "\n";
  o << "output.snapshot_every = " << s.snapshot_every << "\n";
  o << "seed = " << s.seed << "\n";
  o << "epsilon.values = " << detail::join(s.eps_values) << "\n";
  o << "uniqueness.d = " << fmt_double(s.perturbation) << "\n";
  o << "crocco.n_eta = " << s.n_eta << "\n";
  o << "crocco.checkpoints = " << detail::join(s.checkpoints) << "\n";
  return o.str();
}

inline bool Scenario::operator==(const Scenario& o) const {
  const auto &a = solver, &b = o.solver;
  return preset == o.preset && nx == o.nx && ny == o.ny && y_max == o.y_max &&
         x_period == o.x_period && r0 == o.r0 && trace_family == o.trace_family &&
         trace_params == o.trace_params && initial_family == o.initial_family &&
         initial_params == o.initial_params && a.mu == b.mu && a.kappa == b.kappa &&
         a.eps == b.eps && a.dt == b.dt && a.fixed_dt == b.fixed_dt && a.t_end == b.t_end &&
         a.cfl == b.cfl && a.scheme == b.scheme && a.corrector_order == b.corrector_order &&
         a.thresholds.delta0 == b.thresholds.delta0 && a.thresholds.l == b.thresholds.l &&
         a.enforce_positivity == b.enforce_positivity && a.monitor_m == b.monitor_m &&
         a.sample_every == b.sample_every && a.max_steps == b.max_steps &&
         snapshot_every == o.snapshot_every && seed == o.seed && eps_values == o.eps_values &&
         perturbation == o.perturbation && n_eta == o.n_eta && checkpoints == o.checkpoints;
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_scenario(s);
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Binary snapshots
//
// Little-endian. Header: 8-byte magic "MHDBLSNP", uint32 version (1),
// uint32 nx, uint32 ny, uint32 nfields, float64 y_max, float64 x_period,
// float64 t, then nfields names of 16 bytes each (NUL-padded ASCII). Body: per
// field, nx * ny float64 values in row-major (nx, ny) order, value [i][j] at
// (x_i, y_j).

inline constexpr char kSnapshotMagic[8] = {'M', 'H', 'D', 'B', 'L', 'S', 'N', 'P'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  int nx = 0, ny = 0;
  double y_max = 0.0, x_period = 0.0, t = 0.0;
  std::vector<std::string> names;
  std::vector<Field> fields;

  const Field& field(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return fields[k];
    throw IoError("snapshot has no field '" + name + "'");
  }
};

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline void write_snapshot(const std::filesystem::path& path, const Grid2D& g, double t,
                           const std::vector<std::pair<std::string, const Field*>>& fields) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write snapshot " + path.string());
  auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto putd = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  out.write(kSnapshotMagic, 8);
  put32(kSnapshotVersion);
  put32(std::uint32_t(g.nx));
  put32(std::uint32_t(g.ny));
  put32(std::uint32_t(fields.size()));
  putd(g.y_max);
  putd(g.x_period);
  putd(t);
  for (const auto& [name, f] : fields) {
    if (name.size() > 15) throw InvalidArgument("snapshot field name too long: " + name);
    char buf[16] = {};
    std::memcpy(buf, name.data(), name.size());
    out.write(buf, 16);
  }
  for (const auto& [name, f] : fields) {
    if (f->nx() != g.nx || f->ny() != g.ny) throw InvalidArgument("snapshot field '" + name + "' has wrong shape");
    out.write(reinterpret_cast<const char*>(f->column(0)), std::streamsize(sizeof(double) * f->size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_snapshot(const std::filesystem::path& path, const State& s, const Grid2D& g) {
  write_snapshot(path, g, s.t, {{"u", &s.u}, {"h", &s.h}});
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot " + path.string());
  auto need = [&](bool ok) {
    if (!ok) throw IoError("truncated or corrupt snapshot " + path.string());
  };
  char magic[8];
  in.read(magic, 8);
  need(bool(in) && std::memcmp(magic, kSnapshotMagic, 8) == 0);
  auto get32 = [&] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    need(bool(in));
    return v;
  };
  auto getd = [&] {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    need(bool(in));
    return v;
  };
  if (get32() != kSnapshotVersion) throw IoError("unsupported snapshot version in " + path.string());
  Snapshot s;
  s.nx = int(get32());
  s.ny = int(get32());
  const std::uint32_t nf = get32();
  need(s.nx > 0 && s.ny > 0 && nf < 1024);
  s.y_max = getd();
  s.x_period = getd();
  s.t = getd();
  for (std::uint32_t k = 0; k < nf; ++k) {
    char buf[17] = {};
    in.read(buf, 16);
    need(bool(in));
    s.names.emplace_back(buf);
  }
  for (std::uint32_t k = 0; k < nf; ++k) {
    Field f(s.nx, s.ny);
    in.read(reinterpret_cast<char*>(f.column(0)), std::streamsize(sizeof(double) * f.size()));
    need(bool(in));
    s.fields.push_back(std::move(f));
  }
  return s;
}

inline State snapshot_state(const Snapshot& s) { return State(s.field("u"), s.field("h"), s.t); }

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kRunCsvHeader = "t,E,W1,W2,hmin,M,dissipation,dt";

inline void write_timeseries(std::ostream& os, const RunRecord& rec) {
  using detail::fmt_double;
  os << kRunCsvHeader << '\n';
  for (const auto& m : rec.samples)
    os << fmt_double(m.t) << ',' << fmt_double(m.E) << ',' << fmt_double(m.W1) << ','
       << fmt_double(m.W2) << ',' << fmt_double(m.hmin) << ',' << fmt_double(m.M) << ','
       << fmt_double(m.dissipation) << ',' << fmt_double(m.dt) << '\n';
}

inline void write_timeseries(const std::filesystem::path& path, const RunRecord& rec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_timeseries(out, rec);
  if (!out) throw IoError("write failed: " + path.string());
}

/// Reads a CSV with a header row into named numeric columns.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw IoError("CSV has no column '" + name + "'");
  }
  std::vector<double> values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[c]);
    return v;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  int n = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(detail::trim(item));
    return out;
  };
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ParseError(path.string(), n, "expected " + std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    try {
      for (const auto& c : cells) row.push_back(c == "inf" ? INFINITY : detail::parse_double(c));
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string(), n, e.what());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace mhdbl
