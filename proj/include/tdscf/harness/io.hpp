#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdscf/wave_field.hpp"

namespace tdscf::harness {

/// Numeric table with a header row. NaN cells are written as "nan".
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

/// Comma separated, one header line, every value printed with 17 significant
/// digits so a parse reproduces it exactly. Throws std::runtime_error with the
/// path on I/O failure.
void write_csv(const CsvTable& table, const std::string& path);
CsvTable read_csv(const std::string& path);

std::string format_double(double v);

/// Final fields of a run, plus (y, eta) for the Ehrenfest solver.
struct Snapshot {
  double t = 0;
  std::vector<WaveField<double>> fields;
  std::optional<std::pair<double, double>> classical;
};

void write_snapshot(const Snapshot& snap, const std::string& path);
Snapshot read_snapshot(const std::string& path);

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

/// Creates the parent directory if needed, writes through a temporary file and
/// renames it into place.
void write_atomically(const std::string& path, const std::string& bytes);

}  // namespace tdscf::harness
