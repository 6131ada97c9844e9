#pragma once

#include <utility>

#include "spikekit/fem.hpp"
#include "spikekit/geometry.hpp"

namespace spikekit {

// Tensor-product cubic interpolation of a nodal field in the computational
// coordinates (s, θ) of the polar mesh: periodic in θ, continued through the
// pole by reflection (s, θ) → (−s, θ + π). Reproduces nodal values exactly.
class FieldInterpolator {
 public:
  FieldInterpolator() = default;
  FieldInterpolator(const Mesh& mesh, const Field& values) : mesh_(&mesh), f_(&values) {}

  double value(const Vec2& x) const { return eval(x).first; }
  Vec2 gradient(const Vec2& x) const { return eval(x).second; }
  // Throws std::out_of_range outside the closed domain.
  std::pair<double, Vec2> eval(const Vec2& x) const;

 private:
  double node(int ring, int j) const;
  const Mesh* mesh_ = nullptr;
  const Field* f_ = nullptr;
};

}  // namespace spikekit
