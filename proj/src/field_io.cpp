#include "sglab/field_io.hpp"

#include <algorithm>
#include <bit>
#include <tuple>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace sglab::io {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw Error(ErrorCode::Io, "truncated binary field");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return in;
}

int checked_n(std::uint64_t n) {
  if (n == 0 || n > (1u << 15)) throw Error(ErrorCode::Io, "implausible grid size in binary field");
  return static_cast<int>(n);
}

void write_block(const TorusField& f, std::ostream& out) {
  for (double v : f.values()) put_le(out, v);
}

std::vector<double> read_block(std::istream& in, std::size_t count) {
  std::vector<double> v(count);
  for (auto& x : v) x = get_le<double>(in);
  return v;
}

}  // namespace

void write_csv(const TorusField& f, std::ostream& out) {
  out << "i,j,value\n" << std::setprecision(17);
  const int n = f.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out << i << ',' << j << ',' << f(i, j) << '\n';
}

void write_csv(const TorusField& f, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::trunc);
  write_csv(f, out);
}

TorusField read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("i,j,value", 0) != 0)
    throw Error(ErrorCode::Io, "CSV field must start with header i,j,value");
  std::vector<std::tuple<int, int, double>> rows;
  int max_index = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    double v = 0.0;
    char c1 = 0, c2 = 0;
    if (!(ls >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',')
      throw Error(ErrorCode::Io, "malformed CSV row: " + line);
    rows.emplace_back(i, j, v);
    max_index = std::max({max_index, i, j});
  }
  const int n = max_index + 1;
  if (n <= 0 || rows.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
    throw Error(ErrorCode::Io, "CSV field is not a complete square grid");
  TorusGrid grid(n);
  std::vector<double> values(grid.size(), 0.0);
  for (auto [i, j, v] : rows) {
    if (i < 0 || j < 0) throw Error(ErrorCode::Io, "negative CSV index");
    values[grid.index(i, j)] = v;
  }
  return TorusField(grid, std::move(values));
}

TorusField read_csv(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return read_csv(in);
}

void write_binary(const TorusField& f, std::ostream& out) {
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(f.n()));
  write_block(f, out);
}

void write_binary(const TorusField& f, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  write_binary(f, out);
}

TorusField read_binary(std::istream& in) {
  const int n = checked_n(get_le<std::uint64_t>(in));
  TorusGrid grid(n);
  return TorusField(grid, read_block(in, grid.size()));
}

TorusField read_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return read_binary(in);
}

void write_binary(const VectorField& v, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(v.grid().n()));
  write_block(v.c1, out);
  write_block(v.c2, out);
}

VectorField read_vector_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  const int n = checked_n(get_le<std::uint64_t>(in));
  TorusGrid grid(n);
  TorusField a(grid, read_block(in, grid.size()));
  TorusField b(grid, read_block(in, grid.size()));
  return VectorField(std::move(a), std::move(b));
}

TorusField read_field(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_csv(path);
  return read_binary(path);
}

}  // namespace sglab::io
