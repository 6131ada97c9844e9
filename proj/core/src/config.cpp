#include "spikekit/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "spikekit/report.hpp"

namespace spikekit {

namespace {

std::string located(const std::string& source, const std::string& field, const std::string& message, int line,
                    int column) {
  std::ostringstream os;
  if (!source.empty()) os << source << ':';
  if (line > 0) os << line << ':' << column << ':';
  if (!source.empty() || line > 0) os << ' ';
  if (!field.empty()) os << field << ": ";
  os << message;
  return os.str();
}

// A mapping node together with its dotted path; every key read is recorded
// so that leftovers can be reported as unknown.
class Block {
 public:
  Block(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) fail(path_, node_, "expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_[key] && !node_[key].IsNull();
  }

  YAML::Node get(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key) {
    YAML::Node n = get(key);
    return as_number(n, field(key));
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    YAML::Node n = get(key);
    const double v = as_number(n, field(key));
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(field(key), n, "expected an integer");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    YAML::Node n = get(key);
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(field(key), n, "expected true or false");
    }
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    YAML::Node n = get(key);
    if (!n.IsScalar()) fail(field(key), n, "expected a string");
    return n.Scalar();
  }

  std::vector<double> numbers(const std::string& key) {
    YAML::Node n = get(key);
    if (!n.IsSequence()) fail(field(key), n, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(as_number(n[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  Vec2 point(const std::string& key) {
    YAML::Node n = get(key);
    return as_point(n, field(key));
  }

  Block child(const std::string& key) { return Block(get(key), field(key)); }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.Scalar();
      if (!seen_.count(k)) fail(field(k), kv.first, "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& field, const YAML::Node& n, const std::string& msg) {
    const YAML::Mark mk = n ? n.Mark() : YAML::Mark::null_mark();
    const int line = mk.is_null() ? 0 : mk.line + 1;
    const int col = mk.is_null() ? 0 : mk.column + 1;
    throw ConfigError(field, msg, line, col);
  }

  static double as_number(const YAML::Node& n, const std::string& field) {
    if (!n || !n.IsScalar()) fail(field, n, "expected a number");
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) fail(field, n, "expected a finite number");
      return v;
    } catch (const YAML::Exception&) {
      fail(field, n, "expected a number, got '" + n.Scalar() + "'");
    }
  }

  static Vec2 as_point(const YAML::Node& n, const std::string& field) {
    if (!n || !n.IsSequence() || n.size() != 2) fail(field, n, "expected a point [x, y]");
    return Vec2(as_number(n[0], field + "[0]"), as_number(n[1], field + "[1]"));
  }

  const YAML::Node& node() const { return node_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `f`, converting invalid_argument into a ConfigError at node n.
template <class F>
void check(const std::string& field, const YAML::Node& n, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    Block::fail(field, n, e.what());
  }
}

DomainSpec parse_domain(Block b) {
  const std::string kind = b.text("kind", "disk");
  const Vec2 center = b.has("center") ? b.point("center") : Vec2::Zero();
  DomainSpec dom;
  if (kind == "disk") {
    const double r = b.number("radius", 1.0);
    const Vec2 pole = b.has("pole") ? b.point("pole") : center;
    dom = DomainSpec::disk(center, r, pole);
  } else if (kind == "ellipse") {
    if (!b.has("axes")) Block::fail(b.field("axes"), b.node(), "ellipse needs axes: [ax, ay]");
    const Vec2 ax = b.point("axes");
    dom = DomainSpec::ellipse(ax.x(), ax.y(), center);
  } else if (kind == "star") {
    if (!b.has("fourier")) Block::fail(b.field("fourier"), b.node(), "star domain needs fourier coefficients");
    dom = DomainSpec::star(b.numbers("fourier"), center);
  } else {
    Block::fail(b.field("kind"), b.get("kind"), "unknown domain kind '" + kind + "' (disk, ellipse, star)");
  }
  check(b.field("kind"), b.node(), [&] { dom.validate(); });
  b.finish();
  return dom;
}

AnisotropyField parse_anisotropy(Block b, const Vec2& q, bool boundary) {
  const std::string kind = b.text("kind", "constant");
  AnisotropyField a;
  if (kind == "constant") {
    a = AnisotropyField::constant(b.number("value", 1.0), q, boundary);
  } else if (kind == "gaussian" || kind == "cosine") {
    const double amp = b.number("amplitude", 1.0);
    const double width = b.number("width", 0.5);
    if (!(width > 0)) Block::fail(b.field("width"), b.get("width"), "width must be positive");
    if (kind == "gaussian") {
      const double power = b.number("power", 2.0);
      if (!(power > 0)) Block::fail(b.field("power"), b.get("power"), "power must be positive");
      a = AnisotropyField::gaussian(amp, width, q, boundary, power);
    } else {
      a = AnisotropyField::cosine(amp, width, q, boundary);
    }
    a.value = b.number("value", 1.0);
  } else {
    Block::fail(b.field("kind"), b.get("kind"), "unknown anisotropy kind '" + kind + "' (constant, gaussian, cosine)");
  }
  if (!(a.value > 0)) Block::fail(b.field("value"), b.node(), "value must be positive");
  b.finish();
  return a;
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message, int line, int column,
                         const std::string& source)
    : std::runtime_error(located(source, field, message, line, column)), field_(std::move(field)),
      message_(message), line_(line), column_(column) {}

ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root || root.IsNull()) throw ConfigError("", "empty configuration");
  Block top(root, "");

  ExperimentConfig cfg;
  cfg.source_name = source_name;

  if (!top.has("domain")) Block::fail("domain", root, "missing block");
  cfg.domain = parse_domain(top.child("domain"));

  if (!top.has("spikes")) Block::fail("spikes", root, "missing block");
  Block sp = top.child("spikes");
  cfg.q = sp.has("q") ? sp.point("q") : Vec2::Zero();
  cfg.q_on_boundary = sp.boolean("q_on_boundary", false);
  if (cfg.q_on_boundary) {
    cfg.q = cfg.domain.nearest_boundary_point(cfg.q);
  } else if (!cfg.domain.contains(cfg.q, -1e-9)) {
    Block::fail(sp.field("q"), sp.get("q"), "q must lie inside the domain");
  }
  cfg.m = sp.integer("m", 0);
  if (cfg.m < 0) Block::fail(sp.field("m"), sp.get("m"), "m must be non-negative");
  cfg.l = sp.integer("l", cfg.q_on_boundary ? 0 : cfg.m);
  if (cfg.l < 0 || cfg.l > cfg.m) Block::fail(sp.field("l"), sp.get("l"), "l must lie in [0, m]");

  YAML::Node alpha_node = sp.get("alpha");
  cfg.alpha = sp.number("alpha", 0.5);
  if (!(cfg.alpha > -1)) Block::fail(sp.field("alpha"), alpha_node, "alpha must be greater than -1");
  if (is_integer_alpha(cfg.alpha)) Block::fail(sp.field("alpha"), alpha_node, "alpha must be non-integer");

  const std::string mode = sp.text("mode", "sinh");
  if (mode == "sinh")
    cfg.mode = Nonlinearity::Sinh;
  else if (mode == "exp")
    cfg.mode = Nonlinearity::Exp;
  else
    Block::fail(sp.field("mode"), sp.get("mode"), "unknown mode '" + mode + "' (sinh, exp)");

  if (sp.has("signs")) {
    YAML::Node sn = sp.get("signs");
    cfg.signs.clear();
    for (double v : sp.numbers("signs")) {
      if (v != 1 && v != -1) Block::fail(sp.field("signs"), sn, "signs must be +1 or -1");
      cfg.signs.push_back(static_cast<int>(v));
    }
    if (static_cast<int>(cfg.signs.size()) != cfg.m + 1)
      Block::fail(sp.field("signs"), sn, "need m+1 signs b_0..b_m");
  } else {
    cfg.signs.assign(cfg.m + 1, 1);
    if (cfg.mode == Nonlinearity::Sinh)
      for (int i = 1; i <= cfg.m; ++i) cfg.signs[i] = -1;
  }
  if (cfg.mode == Nonlinearity::Exp)
    for (int s : cfg.signs)
      if (s != 1) Block::fail(sp.field("signs"), sp.get("signs"), "exp mode requires all signs +1");

  if (sp.has("d")) {
    cfg.d = sp.number("d");
    if (!(*cfg.d > 0)) Block::fail(sp.field("d"), sp.get("d"), "d must be positive");
  }
  const std::string placement = sp.text("placement", "polygon");
  if (placement == "polygon") {
    cfg.placement = Placement::Polygon;
  } else if (placement == "explicit") {
    cfg.placement = Placement::Explicit;
    if (!sp.has("points")) Block::fail(sp.field("points"), sp.node(), "explicit placement needs points");
    YAML::Node pn = sp.get("points");
    if (!pn.IsSequence()) Block::fail(sp.field("points"), pn, "expected a list of points");
    for (std::size_t i = 0; i < pn.size(); ++i)
      cfg.points.push_back(Block::as_point(pn[i], sp.field("points") + "[" + std::to_string(i) + "]"));
    if (static_cast<int>(cfg.points.size()) != cfg.m)
      Block::fail(sp.field("points"), pn, "number of points differs from m");
  } else {
    Block::fail(sp.field("placement"), sp.get("placement"), "unknown placement '" + placement + "'");
  }
  if (cfg.placement == Placement::Polygon && !cfg.q_on_boundary && cfg.l != cfg.m)
    Block::fail(sp.field("l"), sp.get("l"), "polygon placement about an interior q requires l = m");
  sp.finish();

  cfg.anisotropy = top.has("anisotropy") ? parse_anisotropy(top.child("anisotropy"), cfg.q, cfg.q_on_boundary)
                                         : AnisotropyField::constant(1.0, cfg.q, cfg.q_on_boundary);

  if (!top.has("epsilons")) Block::fail("epsilons", root, "missing list");
  YAML::Node en = top.get("epsilons");
  cfg.epsilons = en.IsSequence() ? top.numbers("epsilons") : std::vector<double>{Block::as_number(en, "epsilons")};
  if (cfg.epsilons.empty()) Block::fail("epsilons", en, "need at least one epsilon");
  for (double e : cfg.epsilons)
    if (!(e > 0 && e < 1)) Block::fail("epsilons", en, "epsilon must lie in (0, 1)");

  cfg.norm = NormParams::defaults(cfg.alpha);
  if (top.has("norm")) {
    Block nb = top.child("norm");
    // Overrides are applied in order; a failure is reported at the key that caused it.
    auto apply = [&](const char* key, double& slot) {
      if (!nb.has(key)) return;
      slot = nb.number(key);
      check(nb.field(key), nb.get(key), [&] { cfg.norm.validate(cfg.alpha); });
    };
    apply("alpha_hat", cfg.norm.alpha_hat);
    apply("p", cfg.norm.p);
    apply("beta", cfg.norm.beta);
    apply("sigma", cfg.norm.sigma);
    apply("R0", cfg.norm.R0);
    nb.finish();
  }

  if (top.has("resolution")) {
    Block rb = top.child("resolution");
    cfg.nr = rb.integer("nr", cfg.nr);
    cfg.nt = rb.integer("nt", 2 * cfg.nr);
    cfg.grading = rb.number("grading", cfg.grading);
    if (cfg.nr < 16) Block::fail(rb.field("nr"), rb.get("nr"), "nr must be at least 16");
    if (cfg.nt < 32 || cfg.nt % 2) Block::fail(rb.field("nt"), rb.get("nt"), "nt must be even and at least 32");
    if (!(cfg.grading >= 0)) Block::fail(rb.field("grading"), rb.get("grading"), "grading must be non-negative");
    rb.finish();
  }

  if (top.has("optimizer")) {
    Block ob = top.child("optimizer");
    auto& o = cfg.optimizer;
    o.max_iters = ob.integer("max_iters", o.max_iters);
    o.initial_step = ob.number("initial_step", o.initial_step);
    o.ftol = ob.number("ftol", o.ftol);
    o.sigma_tilde = ob.number("sigma_tilde", o.sigma_tilde);
    o.binding_margin = ob.number("binding_margin", o.binding_margin);
    if (o.max_iters < 1) Block::fail(ob.field("max_iters"), ob.get("max_iters"), "max_iters must be positive");
    if (!(o.ftol > 0)) Block::fail(ob.field("ftol"), ob.get("ftol"), "ftol must be positive");
    ob.finish();
  }

  if (top.has("newton")) {
    Block nb = top.child("newton");
    auto& n = cfg.newton;
    n.max_iters = nb.integer("max_iters", n.max_iters);
    n.tol = nb.number("tol", n.tol);
    if (n.max_iters < 1) Block::fail(nb.field("max_iters"), nb.get("max_iters"), "max_iters must be positive");
    if (!(n.tol > 0)) Block::fail(nb.field("tol"), nb.get("tol"), "tol must be positive");
    nb.finish();
  }

  cfg.output = top.text("output", cfg.output);
  if (top.has("seed")) {
    YAML::Node sn = top.get("seed");
    const double v = Block::as_number(sn, "seed");
    if (v < 0 || v != std::floor(v)) Block::fail("seed", sn, "seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  top.finish();

  // The anisotropy must peak at q inside the ball; checked on the configured mesh.
  const Mesh probe = cfg.build_mesh();
  check("anisotropy", root["anisotropy"], [&] { cfg.anisotropy.validate(probe, cfg.ball_radius()); });
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path);
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), e.message(), e.line(), e.column(), path);
  }
}

void apply_resolution(ExperimentConfig& cfg, const std::string& spec) {
  const auto x = spec.find('x');
  int nr = 0, nt = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(spec);
    std::size_t p1 = 0, p2 = 0;
    nr = std::stoi(spec.substr(0, x), &p1);
    nt = std::stoi(spec.substr(x + 1), &p2);
    if (p1 != x || p2 != spec.size() - x - 1) throw std::invalid_argument(spec);
  } catch (const std::exception&) {
    throw ConfigError("resolution", "expected NRxNT, got '" + spec + "'");
  }
  if (nr < 16 || nt < 32 || nt % 2) throw ConfigError("resolution", "resolution too small: '" + spec + "'");
  cfg.nr = nr;
  cfg.nt = nt;
}

double ExperimentConfig::ball_radius() const { return d ? *d : default_d(domain, q, q_on_boundary); }

SpikeConfig ExperimentConfig::spike_config(double eps) const {
  SpikeConfig s;
  s.eps = eps;
  s.alpha = alpha;
  s.m = m;
  s.l = l;
  s.b = signs;
  s.mode = mode;
  s.q = q;
  s.q_on_boundary = q_on_boundary;
  s.d = ball_radius();
  if (placement == Placement::Explicit) {
    s.xi = points;
  } else {
    s.xi.assign(m, q);
    const Regime regime = q_on_boundary ? Regime::BoundaryMixed : Regime::Interior;
    s.xi = initial_configuration(s, domain, regime, optimizer.sigma_tilde);
  }
  return s;
}

Mesh ExperimentConfig::build_mesh() const { return spikekit::build_mesh(domain, nr, nt, grading); }

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [&](const std::string& k, double v) { kv(k, fmt17(v)); };
  auto pt = [&](const std::string& k, const Vec2& v) { kv(k, "[" + fmt17(v.x()) + ", " + fmt17(v.y()) + "]"); };

  kv("domain.kind", to_string(domain.kind));
  pt("domain.center", domain.center);
  pt("domain.pole", domain.pole);
  num("domain.radius", domain.radius);
  num("domain.ax", domain.ax);
  num("domain.ay", domain.ay);
  for (std::size_t i = 0; i < domain.fourier.size(); ++i) num("domain.fourier[" + std::to_string(i) + "]", domain.fourier[i]);
  kv("anisotropy.kind", to_string(anisotropy.kind));
  num("anisotropy.value", anisotropy.value);
  num("anisotropy.amplitude", anisotropy.amplitude);
  num("anisotropy.width", anisotropy.width);
  num("anisotropy.power", anisotropy.power);
  pt("spikes.q", q);
  kv("spikes.q_on_boundary", q_on_boundary ? "true" : "false");
  kv("spikes.m", std::to_string(m));
  kv("spikes.l", std::to_string(l));
  std::string sg;
  for (int s : signs) sg += (sg.empty() ? "" : ",") + std::to_string(s);
  kv("spikes.signs", sg);
  num("spikes.alpha", alpha);
  kv("spikes.mode", to_string(mode));
  num("spikes.d", ball_radius());
  kv("spikes.placement", placement == Placement::Polygon ? "polygon" : "explicit");
  for (std::size_t i = 0; i < points.size(); ++i) pt("spikes.points[" + std::to_string(i) + "]", points[i]);
  for (std::size_t i = 0; i < epsilons.size(); ++i) num("epsilons[" + std::to_string(i) + "]", epsilons[i]);
  num("norm.p", norm.p);
  num("norm.beta", norm.beta);
  num("norm.sigma", norm.sigma);
  num("norm.alpha_hat", norm.alpha_hat);
  num("norm.R0", norm.R0);
  kv("resolution.nr", std::to_string(nr));
  kv("resolution.nt", std::to_string(nt));
  num("resolution.grading", grading);
  kv("optimizer.max_iters", std::to_string(optimizer.max_iters));
  num("optimizer.initial_step", optimizer.initial_step);
  num("optimizer.ftol", optimizer.ftol);
  num("optimizer.sigma_tilde", optimizer.sigma_tilde);
  num("optimizer.binding_margin", optimizer.binding_margin);
  kv("newton.max_iters", std::to_string(newton.max_iters));
  num("newton.tol", newton.tol);
  kv("seed", std::to_string(seed));
  return os.str();
}

std::string ExperimentConfig::fingerprint() const { return sha256_hex(canonical()).substr(0, 16); }

}  // namespace spikekit
