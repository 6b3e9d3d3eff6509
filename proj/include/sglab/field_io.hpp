#pragma once

#include <filesystem>
#include <iosfwd>

#include "sglab/torus.hpp"

namespace sglab::io {

/// CSV with header `i,j,value`, row-major (i outer).
void write_csv(const TorusField& f, std::ostream& out);
void write_csv(const TorusField& f, const std::filesystem::path& path);
TorusField read_csv(std::istream& in);
TorusField read_csv(const std::filesystem::path& path);

/// Binary dump: uint64 N (little-endian) followed by N*N little-endian
/// float64 values, row-major.
void write_binary(const TorusField& f, std::ostream& out);
void write_binary(const TorusField& f, const std::filesystem::path& path);
TorusField read_binary(std::istream& in);
TorusField read_binary(const std::filesystem::path& path);

/// Two-component variant: N, then the c1 block, then the c2 block.
void write_binary(const VectorField& v, const std::filesystem::path& path);
VectorField read_vector_binary(const std::filesystem::path& path);

/// Picks CSV or binary by extension (.csv vs anything else).
TorusField read_field(const std::filesystem::path& path);

}  // namespace sglab::io
