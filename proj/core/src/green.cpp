#include "spikekit/green.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spikekit/report.hpp"

namespace spikekit {

std::string to_string(SourceLocation loc) { return loc == SourceLocation::Interior ? "interior" : "boundary"; }

Field GreenField::G(const Mesh& mesh) const {
  Field g(mesh.num_nodes());
  const double cc = c();
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double r = (mesh.nodes[i] - y).norm();
    g[i] = r == 0.0 ? -std::numeric_limits<double>::infinity() : H[i] - cc * std::log(r);
  }
  return g;
}

GreenField solve_green(const EllipticOperator& op, const Vec2& y_in, SourceLocation location) {
  const Mesh& mesh = op.mesh();
  GreenField gf;
  gf.location = location;
  Vec2 y = y_in;
  if (location == SourceLocation::Boundary) {
    gf.snapped_node = mesh.nearest_boundary_node(y_in);
    y = mesh.nodes[gf.snapped_node];
  } else {
    if (!mesh.domain.contains(y_in)) throw std::invalid_argument("interior Green source lies outside the domain");
    const double dist = mesh.domain.distance_to_boundary(y_in);
    const double h = mesh.local_spacing(y_in);
    if (dist < 2.0 * h) {
      std::ostringstream os;
      os << "interior Green source too close to the boundary (distance " << dist << " < 2 cells of size " << h
         << ")";
      throw std::invalid_argument(os.str());
    }
  }
  gf.y = y;
  const double c = log_coefficient(location);
  const AnisotropyField& a = op.coefficient();

  auto f = [&](const Vec2& x) {
    const Vec2 d = x - y;
    const double r2 = d.squaredNorm();
    if (r2 == 0.0) return 0.0;
    return c * (0.5 * std::log(r2) - a.grad_log(x).dot(d) / r2);
  };
  auto g = [&](const Vec2& x, const Vec2& n) {
    const Vec2 d = x - y;
    const double r2 = d.squaredNorm();
    if (r2 == 0.0) return 0.0;
    return c * d.dot(n) / r2;
  };
  const Field rhs = op.interior_load(f, {y}) + op.boundary_load(g);
  gf.H = op.solve(rhs);
  if (!gf.H.allFinite()) throw std::runtime_error("Green solve produced non-finite values");
  gf.robin = FieldInterpolator(mesh, gf.H).value(y);
  return gf;
}

int GreenTable::find(const Vec2& y) const {
  for (std::size_t k = 0; k < fields_.size(); ++k)
    if ((fields_[k]->y - y).norm() < 1e-12) return static_cast<int>(k);
  return -1;
}

int GreenTable::add(const Vec2& y, SourceLocation location) {
  Vec2 target = y;
  if (location == SourceLocation::Boundary) target = mesh().nodes[mesh().nearest_boundary_node(y)];
  const int existing = find(target);
  if (existing >= 0 && fields_[existing]->location == location) return existing;
  return add(solve_green(*op_, y, location));
}

int GreenTable::add(GreenField field) {
  fields_.push_back(std::make_unique<GreenField>(std::move(field)));
  interp_.clear();
  for (const auto& f : fields_) interp_.emplace_back(mesh(), f->H);
  return static_cast<int>(fields_.size()) - 1;
}

double GreenTable::H(const Vec2& x, int id) const { return interp_.at(id).value(x); }

Vec2 GreenTable::grad_H(const Vec2& x, int id) const { return interp_.at(id).gradient(x); }

double GreenTable::G(const Vec2& x, int id) const {
  const GreenField& f = source(id);
  const double r = (x - f.y).norm();
  if (r == 0.0) throw std::domain_error("singular evaluation");
  return H(x, id) - f.c() * std::log(r);
}

GreenPair green_pair_eval(const GreenTable& table, const Vec2& x, int id) {
  return {table.G(x, id), table.H(x, id)};
}

double check_symmetry(const GreenTable& table, int id1, int id2) {
  if (id1 == id2) return 0.0;
  const auto& s1 = table.source(id1);
  const auto& s2 = table.source(id2);
  const auto& a = table.op().coefficient();
  const double lhs = a(s1.y) * table.G(s1.y, id2);
  const double rhs = a(s2.y) * table.G(s2.y, id1);
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-12});
}

std::string operator_fingerprint(const Mesh& mesh, const AnisotropyField& a) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& d = mesh.domain;
  os << "mesh:" << to_string(d.kind) << ':' << d.center.x() << ',' << d.center.y() << ':' << d.pole.x() << ','
     << d.pole.y() << ':' << d.radius << ':' << d.ax << ':' << d.ay << ':';
  for (double c : d.fourier) os << c << ',';
  os << ':' << mesh.nr << 'x' << mesh.nt << ':' << mesh.grading;
  os << "|a:" << to_string(a.kind) << ':' << a.value << ':' << a.amplitude << ':' << a.width << ':' << a.power << ':' << a.q.x()
     << ',' << a.q.y() << ':' << a.q_on_boundary;
  return sha256_hex(os.str());
}

namespace {
constexpr char kMagic[8] = {'S', 'P', 'K', 'G', 'R', 'N', '0', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_green_cache(const std::string& path, const GreenTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write Green cache " + path);
  os.write(kMagic, sizeof(kMagic));
  const std::string fp = operator_fingerprint(table.mesh(), table.op().coefficient());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(fp.size()));
  os.write(fp.data(), static_cast<std::streamsize>(fp.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(table.size()));
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& f = table.source(static_cast<int>(k));
    put(os, f.y.x());
    put(os, f.y.y());
    put<std::int32_t>(os, f.location == SourceLocation::Interior ? 0 : 1);
    put<std::int32_t>(os, f.snapped_node);
    put(os, f.robin);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(f.H.size()));
    os.write(reinterpret_cast<const char*>(f.H.data()), static_cast<std::streamsize>(f.H.size() * sizeof(double)));
  }
}

int load_green_cache(const std::string& path, GreenTable& table) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return 0;
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::string(magic, 8) != std::string(kMagic, 8)) return 0;
  const auto len = get<std::uint32_t>(is);
  std::string fp(len, '\0');
  is.read(fp.data(), len);
  if (fp != operator_fingerprint(table.mesh(), table.op().coefficient())) return 0;
  const auto count = get<std::uint32_t>(is);
  int loaded = 0;
  for (std::uint32_t k = 0; k < count; ++k) {
    GreenField f;
    const double x = get<double>(is), y = get<double>(is);
    f.y = Vec2(x, y);
    f.location = get<std::int32_t>(is) == 0 ? SourceLocation::Interior : SourceLocation::Boundary;
    f.snapped_node = get<std::int32_t>(is);
    f.robin = get<double>(is);
    const auto n = get<std::uint64_t>(is);
    if (static_cast<int>(n) != table.mesh().num_nodes()) return loaded;
    f.H.resize(static_cast<Eigen::Index>(n));
    is.read(reinterpret_cast<char*>(f.H.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) return loaded;
    if (table.find(f.y) < 0) {
      table.add(std::move(f));
      ++loaded;
    }
  }
  return loaded;
}

}  // namespace spikekit
