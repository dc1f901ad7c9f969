#include "tdscf/harness/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <unistd.h>

namespace tdscf::harness {

namespace {

constexpr char kSnapshotMagic[] = "TDSCF1";
constexpr char kClassicalMagic[] = "CLASS1";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  bool tag(const char* magic) {
    const std::size_t len = std::strlen(magic);
    if (bytes_.size() - pos_ < len || bytes_.compare(pos_, len, magic) != 0) return false;
    pos_ += len;
    return true;
  }

  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path_ + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated snapshot");
  }

  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("csv: no column '" + name + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::string text;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) text += ',';
    text += table.header[i];
  }
  text += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::runtime_error(path + ": row width does not match header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      text += format_double(row[i]);
    }
    text += '\n';
  }
  write_atomically(path, text);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  t.header = split(line);
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(path + ": line " + std::to_string(number) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(t.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      double v = 0;
      const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || end != c.data() + c.size() || c.empty()) {
        throw std::runtime_error(path + ": line " + std::to_string(number) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_snapshot(const Snapshot& snap, const std::string& path) {
  std::string out(kSnapshotMagic);
  put_f64(out, snap.t);
  put_u64(out, snap.fields.size());
  for (const auto& f : snap.fields) {
    put_u64(out, static_cast<std::uint64_t>(f.grid().size()));
    put_f64(out, f.grid().a());
    put_f64(out, f.grid().b());
    put_f64(out, f.scale());
    for (Eigen::Index j = 0; j < f.grid().size(); ++j) {
      put_f64(out, f.values()[j].real());
      put_f64(out, f.values()[j].imag());
    }
  }
  if (snap.classical) {
    out += kClassicalMagic;
    put_f64(out, snap.classical->first);
    put_f64(out, snap.classical->second);
  }
  write_atomically(path, out);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str(), path);
  if (!r.tag(kSnapshotMagic)) r.fail("not a snapshot file");
  Snapshot snap;
  snap.t = r.f64();
  const std::uint64_t count = r.u64();
  if (count > 16) r.fail("implausible field count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t n = r.u64();
    const int k = std::countr_zero(n);
    if (n == 0 || !std::has_single_bit(n) || k < 2 || k > 20) r.fail("grid size is not a power of two");
    const double a = r.f64();
    const double b = r.f64();
    const double scale = r.f64();
    Eigen::VectorXcd u(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const double re = r.f64();
      u[j] = {re, r.f64()};
    }
    snap.fields.emplace_back(std::move(u), make_grid(a, b, k), scale);
  }
  if (r.tag(kClassicalMagic)) {
    const double y = r.f64();
    snap.classical = std::make_pair(y, r.f64());
  }
  if (!r.done()) r.fail("trailing bytes");
  return snap;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_atomically(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw std::runtime_error(path + ": cannot create directory: " + ec.message());
  }
  std::ostringstream suffix;
  suffix << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id());
  const fs::path tmp = target.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error(path + ": rename failed: " + ec.message());
  }
}

}  // namespace tdscf::harness
