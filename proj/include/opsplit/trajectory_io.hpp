#pragma once

// Trajectory container.
//
//   offset 0   8 bytes    magic "OPSTRAJ1"
//   offset 8   uint64 LE  header length h in bytes (including the final '\n')
//   offset 16  h bytes    UTF-8 JSON header terminated by '\n'
//   then       float64 LE payload, frame-major, then channel, then row-major
//              (row = y, column = x); frames * channels * points values
//   then       uint64 LE  FNV-1a 64 checksum of the payload bytes
//
// Header keys: format, version, grid {dims, points, length}, channels,
// frames, dt, mu, seed, generator, solver_settings, dtype ("float64"),
// byte_order ("little").

#include "opsplit/error.hpp"
#include "opsplit/field.hpp"
#include "opsplit/trajectory.hpp"

#include "json.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace opsplit {

inline constexpr char kTrajectoryMagic[8] = {'O', 'P', 'S', 'T', 'R', 'A', 'J', '1'};
inline constexpr int kTrajectoryFormatVersion = 1;

struct TrajectoryHeader {
  Grid grid;
  int channels = 1;
  std::size_t frames = 0;
  double dt = 0.0;
  CoefficientMap mu;
  std::uint64_t seed = 0;
  std::string generator;
  std::map<std::string, std::string> solver_settings;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "trajectory IO assumes a little-endian host");

class Fnv1a64 {
public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline nlohmann::json header_json(const Trajectory& t) {
  const Grid& g = t.grid();
  return {{"format", "opsplit-trajectory"},
          {"version", kTrajectoryFormatVersion},
          {"grid", {{"dims", g.dims}, {"points", g.n}, {"length", g.length}}},
          {"channels", t.channels()},
          {"frames", t.size()},
          {"dt", t.dt},
          {"mu", t.mu},
          {"seed", t.seed},
          {"generator", t.generator},
          {"solver_settings", t.solver_settings},
          {"dtype", "float64"},
          {"byte_order", "little"}};
}

inline TrajectoryHeader parse_header(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "opsplit-trajectory" || j.at("version") != kTrajectoryFormatVersion ||
        j.at("dtype") != "float64" || j.at("byte_order") != "little")
      throw FormatError(FormatError::Kind::CorruptHeader, "trajectory header: unsupported format or version");
    TrajectoryHeader h;
    const auto& g = j.at("grid");
    h.grid = Grid{g.at("dims").get<int>(), g.at("points").get<std::size_t>(), g.at("length").get<double>()};
    h.grid.validate();
    h.channels = j.at("channels").get<int>();
    h.frames = j.at("frames").get<std::size_t>();
    h.dt = j.at("dt").get<double>();
    h.mu = j.at("mu").get<CoefficientMap>();
    h.seed = j.at("seed").get<std::uint64_t>();
    h.generator = j.at("generator").get<std::string>();
    h.solver_settings = j.at("solver_settings").get<std::map<std::string, std::string>>();
    if (h.channels != 1 && h.channels != 2)
      throw FormatError(FormatError::Kind::CorruptHeader, "trajectory header: bad channel count");
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::CorruptHeader, std::string("trajectory header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::CorruptHeader, std::string("trajectory header: ") + e.what());
  }
}

inline std::uint64_t read_u64(std::istream& in, FormatError::Kind on_short, const char* what) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(on_short, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline TrajectoryHeader read_header(std::istream& in, const std::string& path) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kTrajectoryMagic, 8) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "'" + path + "' is not a trajectory file");
  const std::uint64_t len = read_u64(in, FormatError::Kind::CorruptHeader, "trajectory header length missing");
  if (len == 0 || len > (1u << 26))
    throw FormatError(FormatError::Kind::CorruptHeader, "trajectory header length out of range");
  std::string text(static_cast<std::size_t>(len), '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
    throw FormatError(FormatError::Kind::CorruptHeader, "trajectory header cut short");
  if (text.back() != '\n') throw FormatError(FormatError::Kind::CorruptHeader, "trajectory header not newline-terminated");
  return parse_header(text);
}

}  // namespace detail

/// Writes atomically: a temporary sibling file is renamed over `path`.
inline void write_trajectory(const Trajectory& t, const std::filesystem::path& path) {
  t.validate();
  const std::string header = detail::header_json(t).dump() + "\n";
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write '" + tmp + "'");
    out.write(kTrajectoryMagic, 8);
    detail::write_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    detail::Fnv1a64 sum;
    for (const auto& f : t.frames) {
      const auto v = f.values();
      const std::size_t bytes = v.size() * sizeof(double);
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(bytes));
      sum.update(v.data(), bytes);
    }
    detail::write_u64(out, sum.value());
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw FormatError(FormatError::Kind::Io, "write to '" + tmp + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError(FormatError::Kind::Io, "cannot rename '" + tmp + "': " + ec.message());
}

/// Metadata only; frames are not read.
inline TrajectoryHeader read_trajectory_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "'");
  return detail::read_header(in, path.string());
}

inline Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "'");
  const TrajectoryHeader h = detail::read_header(in, path.string());
  Trajectory t;
  t.dt = h.dt;
  t.mu = h.mu;
  t.seed = h.seed;
  t.generator = h.generator;
  t.solver_settings = h.solver_settings;
  detail::Fnv1a64 sum;
  const std::size_t per_frame = h.grid.points() * static_cast<std::size_t>(h.channels);
  for (std::size_t i = 0; i < h.frames; ++i) {
    std::vector<double> v(per_frame);
    const std::size_t bytes = per_frame * sizeof(double);
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes)))
      throw FormatError(FormatError::Kind::Truncated,
                        "'" + path.string() + "': payload truncated in frame " + std::to_string(i));
    sum.update(v.data(), bytes);
    t.frames.emplace_back(h.grid, h.channels, std::move(v));
  }
  const std::uint64_t stored =
      detail::read_u64(in, FormatError::Kind::Truncated, "trajectory checksum missing (file truncated)");
  if (stored != sum.value())
    throw FormatError(FormatError::Kind::ChecksumMismatch, "'" + path.string() + "': payload checksum mismatch");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError(FormatError::Kind::CorruptHeader, "'" + path.string() + "': trailing bytes after checksum");
  return t;
}

struct ManifestRow {
  std::string file;
  std::string benchmark;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  double dt = 0.0;
  CoefficientMap mu;
};

/// CSV: file,benchmark,seed,frames,dt,mu with mu as name=value pairs joined by ';'.
inline void write_manifest(std::ostream& os, const std::vector<ManifestRow>& rows) {
  os << "file,benchmark,seed,frames,dt,mu\n";
  for (const auto& r : rows)
    os << r.file << ',' << r.benchmark << ',' << r.seed << ',' << r.frames << ',' << format_number(r.dt) << ','
       << format_coefficients(r.mu) << '\n';
}

}  // namespace opsplit
