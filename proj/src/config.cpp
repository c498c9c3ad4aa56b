#include "tofwave/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "tofwave/errors.hpp"

namespace tofwave {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Thrown by value parsers; the caller attaches the line number.
struct BadValue {
  std::string msg;
};

double to_double(const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw BadValue{"not a number: '" + v + "'"};
  return out;
}

int to_int(const std::string& v) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw BadValue{"not an integer: '" + v + "'"};
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw BadValue{"not a boolean: '" + v + "'"};
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class E, class P>
E to_enum(const std::string& v, P parse) {
  try {
    return parse(v);
  } catch (const Error& e) {
    throw BadValue{e.what()};
  }
}

struct KeyDef {
  std::string section, key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define TW_DOUBLE(sec, name, expr) \
  KeyDef{sec, name, [](Config& c, const std::string& v) { expr = to_double(v); }, [](const Config& c) { return fmt(expr); }}
#define TW_INT(sec, name, expr) \
  KeyDef{sec, name, [](Config& c, const std::string& v) { expr = to_int(v); }, [](const Config& c) { return fmt(expr); }}
#define TW_BOOL(sec, name, expr) \
  KeyDef{sec, name, [](Config& c, const std::string& v) { expr = to_bool(v); }, [](const Config& c) { return fmt(expr); }}
#define TW_PART(sec, name, expr, part)                                                          \
  KeyDef{sec, name, [](Config& c, const std::string& v) { expr.part(to_double(v)); }, \
         [](const Config& c) { return fmt(expr.part()); }}
#define TW_CPLX(sec, name, expr) TW_PART(sec, name "_re", expr, real), TW_PART(sec, name "_im", expr, imag)

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = {
      TW_CPLX("model", "alpha", c.model.alpha),
      TW_CPLX("model", "beta0", c.model.beta0),
      TW_CPLX("model", "beta2", c.model.beta2),
      TW_CPLX("model", "beta4", c.model.beta4),

      TW_DOUBLE("grid", "half_width", c.grid.half_width),
      TW_INT("grid", "points", c.grid.points),

      TW_DOUBLE("profile", "tol", c.profile.tol),
      TW_INT("profile", "max_iter", c.profile.max_iter),
      TW_INT("profile", "polish_iters", c.profile.polish_iters),
      TW_DOUBLE("profile", "template_width", c.profile.template_width),
      TW_DOUBLE("profile", "template_center", c.profile.template_center),
      TW_DOUBLE("profile", "c0", c.profile.c0),
      TW_DOUBLE("profile", "gauge_angle", c.profile.gauge_angle),
      TW_DOUBLE("profile", "boundary_tol", c.profile.boundary_tol),
      TW_BOOL("profile", "check_boundary", c.profile.check_boundary),

      TW_DOUBLE("rates", "m", c.rates.m),
      TW_DOUBLE("rates", "k", c.rates.k),
      TW_DOUBLE("rates", "mu", c.rates.mu),

      TW_DOUBLE("evolution", "dt", c.evolution.sim.dt),
      TW_DOUBLE("evolution", "t_final", c.evolution.sim.t_final),
      KeyDef{"evolution", "scheme",
             [](Config& c, const std::string& v) { c.evolution.sim.scheme = to_enum<Scheme>(v, parse_scheme); },
             [](const Config& c) { return std::string(scheme_name(c.evolution.sim.scheme)); }},
      TW_INT("evolution", "output_stride", c.evolution.sim.output_stride),
      KeyDef{"evolution", "shift_method",
             [](Config& c, const std::string& v) {
               c.evolution.sim.shift_method = to_enum<ShiftMethod>(v, parse_shift_method);
             },
             [](const Config& c) { return std::string(shift_method_name(c.evolution.sim.shift_method)); }},
      TW_DOUBLE("evolution", "amplitude", c.evolution.amplitude),
      KeyDef{"evolution", "shape",
             [](Config& c, const std::string& v) { c.evolution.shape = to_enum<PerturbationShape>(v, parse_shape); },
             [](const Config& c) { return std::string(shape_name(c.evolution.shape)); }},
      TW_DOUBLE("evolution", "decay", c.evolution.decay),
      TW_DOUBLE("evolution", "shift", c.evolution.shift),
      TW_DOUBLE("evolution", "fit_t0", c.evolution.fit_t0),
      TW_DOUBLE("evolution", "floor_factor", c.evolution.floor_factor),

      TW_DOUBLE("spectral", "nu_max", c.spectral.nu_max),
      TW_INT("spectral", "nu_half", c.spectral.nu_half),
      TW_DOUBLE("spectral", "tangency_radius", c.spectral.tangency_radius),
      TW_INT("spectral", "paths", c.spectral.paths),
      TW_DOUBLE("spectral", "path_t_max", c.spectral.path_t_max),
      TW_DOUBLE("spectral", "box_re_min", c.spectral.box.re_min),
      TW_DOUBLE("spectral", "box_re_max", c.spectral.box.re_max),
      TW_DOUBLE("spectral", "box_im_min", c.spectral.box.im_min),
      TW_DOUBLE("spectral", "box_im_max", c.spectral.box.im_max),
      TW_INT("spectral", "box_n_re", c.spectral.box.n_re),
      TW_INT("spectral", "box_n_im", c.spectral.box.n_im),
      TW_DOUBLE("spectral", "artifact_radius", c.spectral.probe.artifact_radius),
      TW_DOUBLE("spectral", "beta_E", c.spectral.probe.beta_E),
      TW_DOUBLE("spectral", "kernel_tol", c.spectral.probe.kernel_tol),
      TW_DOUBLE("spectral", "gap", c.spectral.probe.gap),
      TW_INT("spectral", "inverse_iters", c.spectral.probe.inverse_iters),
      TW_DOUBLE("spectral", "s_min", c.spectral.s_min),
      TW_DOUBLE("spectral", "s_max", c.spectral.s_max),
      TW_INT("spectral", "s_points", c.spectral.s_points),

      TW_DOUBLE("verify", "x_lo_exp", c.verify.sweep.x_lo_exp),
      TW_DOUBLE("verify", "x_hi_exp", c.verify.sweep.x_hi_exp),
      TW_INT("verify", "x_points", c.verify.sweep.x_points),
      TW_DOUBLE("verify", "beta_lo_exp", c.verify.sweep.beta_lo_exp),
      TW_DOUBLE("verify", "beta_hi_exp", c.verify.sweep.beta_hi_exp),
      TW_INT("verify", "beta_points", c.verify.sweep.beta_points),
      TW_INT("verify", "gk_points", c.verify.sweep.gk_points),
      TW_DOUBLE("verify", "kernel3_beta0", c.verify.kernel3_beta0),
      TW_DOUBLE("verify", "gronwall_t_final", c.verify.gronwall_t_final),
      TW_DOUBLE("verify", "gronwall_dt", c.verify.gronwall_dt),
      TW_DOUBLE("verify", "c1", c.verify.c1),
      TW_DOUBLE("verify", "c2", c.verify.c2),
      TW_INT("verify", "remainder_pairs", c.verify.remainder_pairs),
      TW_DOUBLE("verify", "ball_radius", c.verify.ball_radius),
  };
  return defs;
}

#undef TW_DOUBLE
#undef TW_INT
#undef TW_BOOL
#undef TW_CPLX
#undef TW_PART

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const auto& d : registry())
    if (d.section == section && d.key == key) return &d;
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const auto& d : registry())
    if (d.section == section) return true;
  return false;
}

void set_value(Config& cfg, const std::string& section, const std::string& key, const std::string& value,
               const std::string& where) {
  const KeyDef* def = find_key(section, key);
  if (!def) throw Error(ErrorCode::UnknownKey, where + "unknown key '" + section + "." + key + "'");
  if (value.empty()) throw Error(ErrorCode::MissingRequired, where + "no value for '" + section + "." + key + "'");
  try {
    def->set(cfg, value);
  } catch (const BadValue& e) {
    throw Error(ErrorCode::ParseError, where + section + "." + key + ": " + e.msg);
  }
}

}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ParseError, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) throw Error(ErrorCode::UnknownKey, where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where + "expected 'key = value'");
    if (section.empty()) throw Error(ErrorCode::ParseError, where + "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ParseError, where + "empty key");
    set_value(cfg, section, key, trim(line.substr(eq + 1)), where);
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& d : registry()) {
    if (d.section != section) {
      if (!section.empty()) out << '\n';
      section = d.section;
      out << '[' << section << "]\n";
    }
    out << d.key << " = " << d.get(cfg) << '\n';
  }
  return out.str();
}

std::string normalize_config_text(const std::string& text) { return serialize_config(parse_config(text)); }

void apply_override(Config& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw Error(ErrorCode::ParseError, "override must look like section.key=value: '" + assignment + "'");
  set_value(cfg, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            trim(assignment.substr(eq + 1)), "override: ");
}

void validate_config(const Config& cfg) {
  cfg.rates.validate();
  if (cfg.grid.points < 16 || !(cfg.grid.half_width > 0.0))
    throw Error(ErrorCode::InvalidArgument, "grid needs at least 16 points and a positive half width");
  const auto& sim = cfg.evolution.sim;
  if (!(sim.dt > 0.0) || sim.t_final < sim.dt || sim.output_stride < 1)
    throw Error(ErrorCode::InvalidArgument, "evolution needs dt > 0, t_final >= dt, output_stride >= 1");
  if (cfg.spectral.nu_half < 8 || cfg.spectral.s_points < 2 || !(cfg.spectral.s_min > 0.0) ||
      cfg.spectral.s_max <= cfg.spectral.s_min)
    throw Error(ErrorCode::InvalidArgument, "spectral sampling ranges");
  cfg.verify.sweep.validate();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& d : registry()) out.push_back(d.section + "." + d.key);
  return out;
}

}  // namespace tofwave
