#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "spikekit/fem.hpp"

namespace spikekit {

std::string sha256_hex(const std::string& data);

// Shortest round-trip text for a double (17 significant digits).
std::string fmt17(double v);

// Least-squares slope and intercept of log(y) against log(x).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};
SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Minimal CSV writer: header once, rows of doubles/strings at full precision.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void header(const std::vector<std::string>& cols);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ofstream os_;
  bool first_ = true;
};

// Binary dump of nodal fields: magic, node count, field count, names, values.
void write_field_dump(const std::string& path, const Mesh& mesh, const std::vector<std::string>& names,
                      const std::vector<const Field*>& fields);

}  // namespace spikekit
