#include "egvq/bitstream.hpp"

#include "wire.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace egvq {

namespace {

constexpr char kStreamMagic[] = "EGVQBS1";  // 8 bytes with the trailing NUL
constexpr std::size_t kHeaderBytes = 8 + 4 + 2 + 2 + 4 + 4;

int index_bits(std::uint32_t codebook_size) {
  if (codebook_size < 2 || !std::has_single_bit(codebook_size)) {
    throw std::invalid_argument("bitstream: codebook size must be a power of two >= 2");
  }
  return std::countr_zero(codebook_size);
}

// MSB-first bit packer.
class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void write(std::uint32_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      current_ = static_cast<std::uint8_t>((current_ << 1) | ((value >> b) & 1u));
      if (++filled_ == 8) {
        out_.push_back(current_);
        current_ = 0;
        filled_ = 0;
      }
    }
  }

  void flush() {
    if (filled_ > 0) {
      out_.push_back(static_cast<std::uint8_t>(current_ << (8 - filled_)));
      current_ = 0;
      filled_ = 0;
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint8_t current_ = 0;
  int filled_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t read(int bits) {
    std::uint32_t value = 0;
    for (int b = 0; b < bits; ++b) {
      const std::size_t byte = pos_ >> 3;
      const int offset = static_cast<int>(pos_ & 7);
      value = (value << 1) |
              ((bytes_[byte] >> (7 - offset)) & 1u);
      ++pos_;
    }
    return value;
  }

  std::uint64_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace

std::uint64_t PackedStream::payload_bits() const {
  return static_cast<std::uint64_t>(num_frames) * num_groups * depth *
         static_cast<std::uint64_t>(index_bits(codebook_size));
}

std::vector<std::uint8_t> PackedStream::to_bytes() const {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(kHeaderBytes + payload.size());
  bytes.insert(bytes.end(), kStreamMagic, kStreamMagic + 8);
  wire::put_u32(bytes, num_frames);
  wire::put_u16(bytes, num_groups);
  wire::put_u16(bytes, depth);
  wire::put_u32(bytes, codebook_size);
  wire::put_u32(bytes, frame_rate_millihertz);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

PackedStream PackedStream::from_bytes(const std::vector<std::uint8_t>& bytes) {
  wire::Reader reader(bytes.data(), bytes.size(), "stream");
  reader.expect_magic(kStreamMagic, 8);

  PackedStream stream;
  stream.num_frames = reader.get_u32();
  stream.num_groups = reader.get_u16();
  stream.depth = reader.get_u16();
  stream.codebook_size = reader.get_u32();
  stream.frame_rate_millihertz = reader.get_u32();
  if (stream.num_frames < 1 || stream.num_groups < 1 || stream.depth < 1) {
    throw std::runtime_error("stream: empty shape in header");
  }

  const std::uint64_t bits = stream.payload_bits();
  const std::size_t expected_bytes = static_cast<std::size_t>((bits + 7) / 8);
  if (reader.remaining() < expected_bytes) {
    throw std::runtime_error("stream: truncated");
  }
  if (reader.remaining() > expected_bytes) {
    throw std::runtime_error("stream: trailing garbage beyond padding");
  }
  stream.payload.assign(reader.cursor(), reader.cursor() + expected_bytes);

  // Padding bits past the payload must be zero.
  const int pad_bits = static_cast<int>(expected_bytes * 8 - bits);
  if (pad_bits > 0) {
    const std::uint8_t tail = stream.payload.back();
    if ((tail & ((1u << pad_bits) - 1u)) != 0) {
      throw std::runtime_error("stream: trailing garbage beyond padding");
    }
  }
  return stream;
}

PackedStream pack(const CodeFrame& codes, const QuantizerSpec& spec, double frame_rate_hz) {
  if (codes.num_groups != spec.num_groups || codes.depth != spec.depth ||
      codes.indices.cols() != spec.total_codebooks()) {
    throw std::invalid_argument("pack: code layout does not match spec");
  }
  if (codes.frames() < 1) {
    throw std::invalid_argument("pack: empty code frame");
  }
  if (codes.frames() > std::numeric_limits<std::uint32_t>::max() ||
      spec.num_groups > std::numeric_limits<std::uint16_t>::max() ||
      spec.depth > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("pack: shape exceeds header field limits");
  }
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw std::invalid_argument("pack: frame rate must be finite and > 0");
  }

  PackedStream stream;
  stream.num_frames = static_cast<std::uint32_t>(codes.frames());
  stream.num_groups = static_cast<std::uint16_t>(spec.num_groups);
  stream.depth = static_cast<std::uint16_t>(spec.depth);
  stream.codebook_size = static_cast<std::uint32_t>(spec.codebook_size);
  stream.frame_rate_millihertz =
      static_cast<std::uint32_t>(std::llround(frame_rate_hz * 1000.0));

  const int bits = index_bits(stream.codebook_size);
  stream.payload.reserve(static_cast<std::size_t>((stream.payload_bits() + 7) / 8));
  BitWriter writer(stream.payload);
  for (Index t = 0; t < codes.frames(); ++t) {
    for (Index c = 0; c < codes.indices.cols(); ++c) {
      const std::uint32_t index = codes.indices(t, c);
      if (index >= stream.codebook_size) {
        throw std::invalid_argument("pack: code index out of range");
      }
      writer.write(index, bits);
    }
  }
  writer.flush();
  return stream;
}

CodeFrame unpack(const PackedStream& stream) {
  if (stream.num_frames < 1 || stream.num_groups < 1 || stream.depth < 1) {
    throw std::invalid_argument("unpack: empty shape");
  }
  const int bits = index_bits(stream.codebook_size);
  const std::uint64_t expected_bits = stream.payload_bits();
  if (stream.payload.size() != static_cast<std::size_t>((expected_bits + 7) / 8)) {
    throw std::invalid_argument("unpack: payload length inconsistent with header");
  }

  CodeFrame codes;
  codes.num_groups = stream.num_groups;
  codes.depth = stream.depth;
  codes.indices.resize(static_cast<Index>(stream.num_frames),
                       static_cast<Index>(stream.num_groups) * stream.depth);
  BitReader reader(stream.payload);
  for (Index t = 0; t < codes.indices.rows(); ++t) {
    for (Index c = 0; c < codes.indices.cols(); ++c) {
      codes.indices(t, c) = reader.read(bits);
    }
  }
  return codes;
}

void write_stream(const PackedStream& stream, const std::filesystem::path& path) {
  wire::write_file(path, stream.to_bytes());
}

PackedStream read_stream(const std::filesystem::path& path) {
  return PackedStream::from_bytes(wire::read_file(path));
}

}  // namespace egvq
