#pragma once

#include "egvq/quantizers.hpp"
#include "egvq/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace egvq {

/// Bit-exact fixed-length-index stream. Layout:
///   magic "EGVQBS1\0", u32 T, u16 G, u16 D, u32 N, u32 frame-rate in
///   millihertz (header integers little-endian), then T*G*D*log2(N)
///   payload bits: one index per (frame, group, stage), frame-major then
///   group-major then stage, packed most-significant-bit first and
///   zero-padded to a byte boundary at the end of the stream only.
struct PackedStream {
  std::uint32_t num_frames = 0;
  std::uint16_t num_groups = 0;
  std::uint16_t depth = 0;
  std::uint32_t codebook_size = 0;
  std::uint32_t frame_rate_millihertz = 0;
  std::vector<std::uint8_t> payload;

  double frame_rate_hz() const { return frame_rate_millihertz / 1000.0; }
  std::uint64_t payload_bits() const;

  std::vector<std::uint8_t> to_bytes() const;
  static PackedStream from_bytes(const std::vector<std::uint8_t>& bytes);

  bool operator==(const PackedStream&) const = default;
};

PackedStream pack(const CodeFrame& codes, const QuantizerSpec& spec, double frame_rate_hz);
CodeFrame unpack(const PackedStream& stream);

/// .egvq file = header + payload exactly as above.
void write_stream(const PackedStream& stream, const std::filesystem::path& path);
PackedStream read_stream(const std::filesystem::path& path);

}  // namespace egvq
