#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "autohyper/metrics.hpp"
#include "autohyper/tensor.hpp"

namespace autohyper {

// On-disk layout, all integers little-endian:
//   "AHSN" | u32 version (=1) | u32 layer_count
//   per layer: u32 name_len | name bytes | u32 N1 N2 N3 N4 | N1*N2*N3*N4 float32 (row-major)
inline constexpr char kSnapshotMagic[4] = {'A', 'H', 'S', 'N'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotLayer {
  std::string name;
  Dims4 dims;
  std::vector<float> data;

  bool operator==(const SnapshotLayer&) const = default;
};

struct Snapshot {
  std::vector<SnapshotLayer> layers;

  bool operator==(const Snapshot&) const = default;
};

void write_snapshot(std::ostream& out, const Snapshot& snapshot);
void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);

/// Throws FormatError on bad magic, unsupported version, truncation or non-finite payloads.
Snapshot read_snapshot(std::istream& in);
Snapshot read_snapshot(const std::filesystem::path& path);

/// 64-bit analysis tensors (exact promotion).
WeightSet promote(const Snapshot& snapshot);

/// "epoch_007.snap"
std::string snapshot_filename(std::size_t epoch);

/// Reads epoch_001.snap .. epoch_T.snap where T is the highest index present. A gap raises
/// IncompleteProbeError naming the first missing epoch.
std::vector<Snapshot> read_snapshot_sequence(const std::filesystem::path& directory);

}  // namespace autohyper
