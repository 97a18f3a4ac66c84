#include "autohyper/snapshot.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <regex>

#include "autohyper/error.hpp"

namespace autohyper {

namespace {

constexpr std::uint32_t kMaxNameLength = 1u << 16;
constexpr std::uint64_t kMaxElements = 1ull << 31;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw ValidationError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const { return offset_; }

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw FormatError(std::string("truncated snapshot while reading ") + what, offset_ + got);
    }
    offset_ += n;
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_snapshot(std::ostream& out, const Snapshot& snapshot) {
  out.write(kSnapshotMagic, 4);
  put_u32(out, kSnapshotVersion);
  put_u32(out, checked_u32(snapshot.layers.size(), "layer count"));
  for (const SnapshotLayer& layer : snapshot.layers) {
    if (layer.data.size() != layer.dims.size()) {
      throw ValidationError("snapshot layer '" + layer.name + "' has " +
                            std::to_string(layer.data.size()) + " values for dims " +
                            to_string(layer.dims));
    }
    put_u32(out, checked_u32(layer.name.size(), "layer name length"));
    out.write(layer.name.data(), static_cast<std::streamsize>(layer.name.size()));
    for (std::size_t d : layer.dims.n) put_u32(out, checked_u32(d, "dimension"));
    for (float v : layer.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw Error("failed writing snapshot");
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_snapshot(out, snapshot);
}

Snapshot read_snapshot(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw FormatError("bad snapshot magic '" + std::string(magic, 4) + "', expected 'AHSN'", 0);
  }
  const std::uint32_t version = r.u32("version");
  if (version != kSnapshotVersion) {
    throw FormatError("unsupported snapshot version " + std::to_string(version), 4);
  }
  const std::uint32_t count = r.u32("layer count");
  Snapshot snapshot;
  for (std::uint32_t l = 0; l < count; ++l) {
    SnapshotLayer layer;
    const std::uint64_t name_at = r.offset();
    const std::uint32_t name_len = r.u32("layer name length");
    if (name_len > kMaxNameLength) {
      throw FormatError("layer name length " + std::to_string(name_len) + " is implausible", name_at);
    }
    layer.name.resize(name_len);
    r.bytes(layer.name.data(), name_len, "layer name");
    const std::uint64_t dims_at = r.offset();
    std::uint64_t elements = 1;
    for (std::size_t d = 0; d < 4; ++d) {
      layer.dims.n[d] = r.u32("dimension");
      elements *= layer.dims.n[d];
      if (layer.dims.n[d] == 0 || elements > kMaxElements) {
        throw FormatError("layer '" + layer.name + "' has invalid dims", dims_at);
      }
    }
    layer.data.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(elements, 1u << 20)));
    for (std::uint64_t i = 0; i < elements; ++i) {
      const std::uint64_t at = r.offset();
      const float v = std::bit_cast<float>(r.u32("payload"));
      if (!std::isfinite(v)) {
        throw FormatError("non-finite value in layer '" + layer.name + "'", at);
      }
      layer.data.push_back(v);
    }
    snapshot.layers.push_back(std::move(layer));
  }
  return snapshot;
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot '" + path.string() + "'");
  try {
    return read_snapshot(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

WeightSet promote(const Snapshot& snapshot) {
  WeightSet set;
  set.reserve(snapshot.layers.size());
  for (const SnapshotLayer& layer : snapshot.layers) {
    set.emplace_back(layer.name, layer.dims, std::vector<double>(layer.data.begin(), layer.data.end()));
  }
  return set;
}

std::string snapshot_filename(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03zu.snap", epoch);
  return buf;
}

std::vector<Snapshot> read_snapshot_sequence(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw IncompleteProbeError("snapshot directory '" + directory.string() + "' does not exist");
  }
  static const std::regex pattern(R"(epoch_(\d+)\.snap)");
  std::map<std::size_t, fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) {
      files[std::stoul(m[1].str())] = entry.path();
    }
  }
  if (files.empty()) {
    throw IncompleteProbeError("no epoch_NNN.snap files in '" + directory.string() + "'");
  }
  const std::size_t last = files.rbegin()->first;
  for (std::size_t t = 1; t <= last; ++t) {
    if (!files.count(t)) {
      throw IncompleteProbeError("snapshot sequence in '" + directory.string() +
                                 "' is missing epoch " + std::to_string(t) + " (" +
                                 snapshot_filename(t) + ")");
    }
  }
  std::vector<Snapshot> out;
  for (std::size_t t = 1; t <= last; ++t) out.push_back(read_snapshot(files[t]));
  return out;
}

}  // namespace autohyper
