#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "langstep/model.hpp"

namespace langstep {

// Shortest representation that round-trips the exact double (so reruns with
// the same seed produce byte-identical files).
std::string format_double(double v);

void write_csv_header(std::ostream& os, std::span<const std::string> cols);
void write_csv_row(std::ostream& os, std::span<const double> vals);

// Chain samples for export: one row per recorded point.
struct SampleDump {
  int d = 1;
  struct Row {
    std::uint64_t stream = 0;
    std::uint64_t n = 0;
    double time = 0.0;  // Gamma_n
    Vec x;
    double weight = 0.0;
  };
  std::vector<Row> rows;
};

// CSV columns: stream, n, Gamma_n, x_1..x_d, weight.
void write_samples_csv(std::ostream& os, const SampleDump& dump);

// Little-endian binary dump: header {magic "LSTP", version u32, d u32,
// count u64}, then per row the fields stream, n, Gamma_n, x_1..x_d, weight,
// all as f64.
void write_samples_binary(std::ostream& os, const SampleDump& dump);
SampleDump read_samples_binary(std::istream& is);

bool file_exists(const std::string& path);

// Creates the output file; refuses to overwrite an existing file unless
// force is set (throws std::runtime_error).
std::string prepare_output_path(const std::string& path, bool force);

// Run manifest alongside a results file: config echo, seed, version,
// wall-clock seconds.
void write_manifest(const std::string& results_path, const std::string& config_echo_json,
                    std::uint64_t seed, double wall_seconds);

}  // namespace langstep
