#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spikekit/fem.hpp"
#include "spikekit/interp.hpp"

namespace spikekit {

enum class SourceLocation { Interior, Boundary };

std::string to_string(SourceLocation loc);

// Coefficient c of the logarithm in G = H − c log|x − y|.
inline double log_coefficient(SourceLocation loc) {
  return loc == SourceLocation::Interior ? 0.5 / 3.14159265358979323846 : 1.0 / 3.14159265358979323846;
}

// Green function of −Δ − ∇log a·∇ + 1 with zero Neumann data, split as
// G(x, y) = H(x, y) − c log|x − y|.
struct GreenField {
  Vec2 y = Vec2::Zero();
  SourceLocation location = SourceLocation::Interior;
  int snapped_node = -1;  // boundary sources sit on this node
  Field H;
  double robin = 0.0;  // H(y, y)

  double c() const { return log_coefficient(location); }
  // Nodal values of G; the node at the source (if any) is −∞.
  Field G(const Mesh& mesh) const;
};

// Solves the regular-part problem for a source at y. Boundary sources are
// moved to the nearest boundary node; interior sources must keep two mesh
// cells of distance to the boundary.
GreenField solve_green(const EllipticOperator& op, const Vec2& y, SourceLocation location);

struct GreenPair {
  double G;
  double H;
};

class GreenTable {
 public:
  explicit GreenTable(const EllipticOperator& op) : op_(&op) {}

  const EllipticOperator& op() const { return *op_; }
  const Mesh& mesh() const { return op_->mesh(); }

  // Adds a source (or returns the id of an identical one already present).
  int add(const Vec2& y, SourceLocation location);
  int add(GreenField field);
  // Id of a source at y (within 1e-12), or −1.
  int find(const Vec2& y) const;
  std::size_t size() const { return fields_.size(); }
  const GreenField& source(int id) const { return *fields_.at(id); }

  double H(const Vec2& x, int id) const;
  Vec2 grad_H(const Vec2& x, int id) const;
  // Throws std::domain_error("singular evaluation") when x coincides with the source.
  double G(const Vec2& x, int id) const;
  double robin(int id) const { return source(id).robin; }

 private:
  const EllipticOperator* op_;
  std::vector<std::unique_ptr<GreenField>> fields_;
  std::vector<FieldInterpolator> interp_;
};

GreenPair green_pair_eval(const GreenTable& table, const Vec2& x, int id);

// |a(y1)G(y1,y2) − a(y2)G(y2,y1)| / max(|a(y1)G(y1,y2)|, |a(y2)G(y2,y1)|, 1e-12).
double check_symmetry(const GreenTable& table, int id1, int id2);

// Fingerprint of the discretization (mesh + coefficient) used to key caches.
std::string operator_fingerprint(const Mesh& mesh, const AnisotropyField& a);

// Binary cache of solved sources; load ignores files whose fingerprint differs.
void save_green_cache(const std::string& path, const GreenTable& table);
int load_green_cache(const std::string& path, GreenTable& table);

}  // namespace spikekit
