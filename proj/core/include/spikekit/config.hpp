#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikekit/fullsolve.hpp"
#include "spikekit/optimizer.hpp"

namespace spikekit {

// Parse or validation failure with the offending location. `line` and
// `column` are 1-based; 0 when the problem is not tied to a position.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0, int column = 0,
              const std::string& source = "");
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string field_;
  std::string message_;
  int line_;
  int column_;
};

enum class Placement { Polygon, Explicit };

struct ExperimentConfig {
  std::string source_name = "<string>";

  DomainSpec domain = DomainSpec::unit_disk();
  AnisotropyField anisotropy;

  Vec2 q = Vec2::Zero();
  bool q_on_boundary = false;
  int m = 0;
  int l = 0;
  std::vector<int> signs{1};  // b_0..b_m
  double alpha = 0.5;
  Nonlinearity mode = Nonlinearity::Sinh;
  std::optional<double> d;  // default: geometric rule
  Placement placement = Placement::Polygon;
  std::vector<Vec2> points;  // explicit placement

  std::vector<double> epsilons;
  NormParams norm;

  int nr = 128;
  int nt = 256;
  double grading = 4.0;

  std::string output = "out";
  std::uint64_t seed = 1;

  OptimizerOptions optimizer;
  NewtonOptions newton;

  double ball_radius() const;
  // SpikeConfig for one ε. Polygon placement uses the optimizer's starting
  // configuration; explicit placement copies `points`.
  SpikeConfig spike_config(double eps) const;
  Mesh build_mesh() const;

  // One `key = value` line per setting, full precision, fixed order.
  std::string canonical() const;
  // SHA-256 of canonical(), first 16 hex digits.
  std::string fingerprint() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source_name = "<string>");
ExperimentConfig load_config(const std::string& path);

// "NRxNT", e.g. "128x256".
void apply_resolution(ExperimentConfig& cfg, const std::string& spec);

}  // namespace spikekit
