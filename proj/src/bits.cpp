#include "malab/bits.hpp"

#include <fstream>
#include <iterator>

#include "malab/error.hpp"

namespace malab {

void BitBuffer::push_uint(std::uint64_t value, int width) {
  for (int b = width - 1; b >= 0; --b) push(((value >> b) & 1U) != 0);
}

std::vector<std::uint8_t> BitBuffer::pack() const {
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
  }
  return out;
}

BitBuffer BitBuffer::unpack(const std::vector<std::uint8_t>& bytes, std::size_t bit_count) {
  require(bit_count <= bytes.size() * 8, ErrorKind::InvalidArgument, "bit count exceeds packed data");
  std::vector<std::uint8_t> bits(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1U;
  return BitBuffer(std::move(bits));
}

std::optional<bool> BitReader::read_bit() {
  if (pos_ >= buf_->size()) return std::nullopt;
  return (*buf_)[pos_++];
}

std::optional<bool> BitReader::peek_bit() const {
  if (pos_ >= buf_->size()) return std::nullopt;
  return (*buf_)[pos_];
}

std::optional<std::uint64_t> BitReader::read_uint(int width) {
  if (remaining() < static_cast<std::size_t>(width)) return std::nullopt;
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b) v = (v << 1) | ((*buf_)[pos_++] ? 1U : 0U);
  return v;
}

void write_bitstream_file(const std::filesystem::path& path, const BitBuffer& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  const std::uint64_t n = bits.size();
  for (int b = 7; b >= 0; --b) out.put(static_cast<char>((n >> (8 * b)) & 0xFFU));
  const auto packed = bits.pack();
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

BitBuffer read_bitstream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(data.size() >= 8, ErrorKind::Io, "bitstream file too short: " + path.string());
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) n = (n << 8) | data[i];
  return BitBuffer::unpack(std::vector<std::uint8_t>(data.begin() + 8, data.end()), n);
}

}  // namespace malab
