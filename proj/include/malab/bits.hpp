#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace malab {

/// Growable bit sequence, one element per bit. Multi-bit fields are written
/// most significant bit first.
class BitBuffer {
 public:
  BitBuffer() = default;
  explicit BitBuffer(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  void push(bool bit) { bits_.push_back(bit ? 1 : 0); }
  void push_uint(std::uint64_t value, int width);
  void append(const BitBuffer& other) { bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end()); }

  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  void truncate(std::size_t n) { if (n < bits_.size()) bits_.resize(n); }

  const std::vector<std::uint8_t>& raw() const noexcept { return bits_; }

  /// Packed form, 8 bits per byte, first bit in the most significant position.
  std::vector<std::uint8_t> pack() const;
  static BitBuffer unpack(const std::vector<std::uint8_t>& bytes, std::size_t bit_count);

  friend bool operator==(const BitBuffer&, const BitBuffer&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

class BitReader {
 public:
  explicit BitReader(const BitBuffer& buffer, std::size_t position = 0) : buf_(&buffer), pos_(position) {}

  std::optional<bool> read_bit();
  /// Returns nullopt (and consumes nothing) if fewer than `width` bits remain.
  std::optional<std::uint64_t> read_uint(int width);
  std::optional<bool> peek_bit() const;

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return buf_->size() - pos_; }
  void seek(std::size_t position) noexcept { pos_ = position; }

 private:
  const BitBuffer* buf_;
  std::size_t pos_;
};

/// Bitstream file: 8-byte big-endian bit count followed by the packed bits.
void write_bitstream_file(const std::filesystem::path& path, const BitBuffer& bits);
BitBuffer read_bitstream_file(const std::filesystem::path& path);

}  // namespace malab
