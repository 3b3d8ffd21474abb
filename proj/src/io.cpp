#include "langstep/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "langstep/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary dump layout is little-endian");

namespace langstep {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv_header(std::ostream& os, std::span<const std::string> cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os << ',';
    os << cols[i];
  }
  os << '\n';
}

void write_csv_row(std::ostream& os, std::span<const double> vals) {
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) os << ',';
    os << format_double(vals[i]);
  }
  os << '\n';
}

void write_samples_csv(std::ostream& os, const SampleDump& dump) {
  std::vector<std::string> cols{"stream", "n", "Gamma_n"};
  for (int k = 1; k <= dump.d; ++k) cols.push_back("x_" + std::to_string(k));
  cols.push_back("weight");
  write_csv_header(os, cols);
  std::vector<double> row(3 + dump.d + 1);
  for (const auto& r : dump.rows) {
    row[0] = static_cast<double>(r.stream);
    row[1] = static_cast<double>(r.n);
    row[2] = r.time;
    for (int k = 0; k < dump.d; ++k) row[3 + k] = r.x(k);
    row[3 + dump.d] = r.weight;
    write_csv_row(os, row);
  }
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void write_samples_binary(std::ostream& os, const SampleDump& dump) {
  os.write("LSTP", 4);
  put_u32(os, kDumpFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(dump.d));
  put_u64(os, static_cast<std::uint64_t>(dump.rows.size()));
  for (const auto& r : dump.rows) {
    put_f64(os, static_cast<double>(r.stream));
    put_f64(os, static_cast<double>(r.n));
    put_f64(os, r.time);
    for (int k = 0; k < dump.d; ++k) put_f64(os, r.x(k));
    put_f64(os, r.weight);
  }
}

SampleDump read_samples_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LSTP", 4) != 0)
    throw std::runtime_error("read_samples_binary: bad magic");
  const std::uint32_t version = get_u32(is);
  if (version != kDumpFormatVersion)
    throw std::runtime_error("read_samples_binary: unsupported format version");
  SampleDump dump;
  dump.d = static_cast<int>(get_u32(is));
  const std::uint64_t count = get_u64(is);
  dump.rows.resize(count);
  for (auto& r : dump.rows) {
    r.stream = static_cast<std::uint64_t>(get_f64(is));
    r.n = static_cast<std::uint64_t>(get_f64(is));
    r.time = get_f64(is);
    r.x.resize(dump.d);
    for (int k = 0; k < dump.d; ++k) r.x(k) = get_f64(is);
    r.weight = get_f64(is);
  }
  if (!is) throw std::runtime_error("read_samples_binary: truncated file");
  return dump;
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

std::string prepare_output_path(const std::string& path, bool force) {
  if (path.empty()) throw std::runtime_error("output path is empty");
  if (!force && std::filesystem::exists(path))
    throw std::runtime_error("refusing to overwrite existing output '" + path +
                             "' (pass --force to allow)");
  return path;
}

void write_manifest(const std::string& results_path, const std::string& config_echo_json,
                    std::uint64_t seed, double wall_seconds) {
  std::ofstream os(results_path + ".manifest.json");
  if (!os) throw std::runtime_error("cannot write manifest for '" + results_path + "'");
  os << "{\n  \"config\": " << config_echo_json << ",\n";
  os << "  \"seed\": " << seed << ",\n";
  os << "  \"version\": \"" << kVersion << "\",\n";
  os << "  \"wall_seconds\": " << format_double(wall_seconds) << "\n}\n";
}

}  // namespace langstep
