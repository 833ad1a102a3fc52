#include "macsav/snapshot.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

namespace macsav {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'A', 'C', 'F'};

template <class U>
void write_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t k = 0; k < sizeof(U); ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xFFu);
  os.write(buf.data(), buf.size());
  if (!os) throw SnapshotError("MACF: write failed");
}

template <class U>
U read_le(std::istream& is) {
  std::array<char, sizeof(U)> buf{};
  is.read(buf.data(), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) throw SnapshotError("MACF: truncated input");
  U v = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(static_cast<unsigned char>(buf[k])) << (8 * k);
  return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }
void write_f64(std::ostream& os, double v) { write_le(os, std::bit_cast<std::uint64_t>(v)); }
std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

template <Placement P>
void write_field(std::ostream& os, const Field<P>& f) {
  os.write(kMagic.data(), kMagic.size());
  write_u32(os, static_cast<std::uint32_t>(f.grid().n()));
  const char code = static_cast<char>(P);
  os.write(&code, 1);
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i) write_f64(os, f(i, j));
}

template <Placement P>
Field<P> read_field(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (is.gcount() != 4 || magic != kMagic) throw SnapshotError("MACF: bad magic");
  const std::uint32_t n = read_u32(is);
  char code = 0;
  if (!is.read(&code, 1)) throw SnapshotError("MACF: truncated input");
  if (static_cast<std::uint8_t>(code) != static_cast<std::uint8_t>(P))
    throw SnapshotError("MACF: placement code " + std::to_string(static_cast<int>(code)) + " does not match expected " +
                        std::to_string(static_cast<int>(P)));
  if (n < 2 || n > (1u << 20)) throw SnapshotError("MACF: implausible grid size " + std::to_string(n));
  Field<P> f(GridSpec(static_cast<int>(n)));
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i) f.ref(i, j) = read_f64(is);
  try {
    f.fill_ghosts();
  } catch (const BoundaryViolation& e) {
    throw SnapshotError(std::string("MACF: ") + e.what());
  }
  return f;
}

template void write_field(std::ostream&, const CellField&);
template void write_field(std::ostream&, const XEdgeField&);
template void write_field(std::ostream&, const YEdgeField&);
template CellField read_field<Placement::cell>(std::istream&);
template XEdgeField read_field<Placement::x_edge>(std::istream&);
template YEdgeField read_field<Placement::y_edge>(std::istream&);

}  // namespace macsav
