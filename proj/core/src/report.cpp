#include "spikekit/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace spikekit {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string fmt17(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

CsvWriter::CsvWriter(const std::string& path) : os_(path, std::ios::trunc) {
  if (!os_) throw std::runtime_error("cannot write " + path);
}

void CsvWriter::header(const std::vector<std::string>& cols) {
  for (const auto& c : cols) cell(c);
  end_row();
}

CsvWriter& CsvWriter::cell(double v) { return cell(fmt17(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (!first_) os_ << ',';
  os_ << v;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

void write_field_dump(const std::string& path, const Mesh& mesh, const std::vector<std::string>& names,
                      const std::vector<const Field*>& fields) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write("SPKFLD01", 8);
  const std::uint64_t n = static_cast<std::uint64_t>(mesh.num_nodes());
  const std::uint32_t nf = static_cast<std::uint32_t>(fields.size());
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(mesh.nr), static_cast<std::uint32_t>(mesh.nt)};
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  os.write(reinterpret_cast<const char*>(&nf), sizeof(nf));
  for (const auto& nm : names) {
    const std::uint32_t len = static_cast<std::uint32_t>(nm.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(nm.data(), len);
  }
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    os.write(reinterpret_cast<const char*>(&mesh.nodes[i].x()), sizeof(double));
    os.write(reinterpret_cast<const char*>(&mesh.nodes[i].y()), sizeof(double));
  }
  for (const Field* f : fields)
    os.write(reinterpret_cast<const char*>(f->data()), static_cast<std::streamsize>(f->size() * sizeof(double)));
}

}  // namespace spikekit
