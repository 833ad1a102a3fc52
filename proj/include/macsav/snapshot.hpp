#pragma once

// MACF binary field blocks:
//   "MACF" | u32 N | u8 placement (0 cell, 1 x-edge, 2 y-edge) | f64 values
// Values are the interior only, row-major with j outer, little-endian.

#include <iosfwd>

#include "macsav/grid.hpp"

namespace macsav {

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <Placement P>
void write_field(std::ostream& os, const Field<P>& f);

/// Reads one block; throws SnapshotError on bad magic, placement mismatch,
/// or truncation. The returned field has its ghosts filled.
template <Placement P>
Field<P> read_field(std::istream& is);

// Little-endian scalar helpers shared with the checkpoint format.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

}  // namespace macsav
