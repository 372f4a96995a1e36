#include "malab/unary.hpp"

#include <cstdlib>

namespace malab::codec {

void unary_encode_offset(std::int64_t s, BitBuffer& out) {
  out.push(true);
  if (s == 0) {
    out.push(false);
    out.push(false);
    return;
  }
  out.push(true);
  out.push(s > 0);
  const auto mag = static_cast<std::uint64_t>(s > 0 ? s : -s);
  for (std::uint64_t i = 1; i < mag; ++i) out.push(true);
  out.push(false);
}

BitBuffer unary_encode_offset(std::int64_t s) {
  BitBuffer b;
  unary_encode_offset(s, b);
  return b;
}

std::size_t unary_length(std::int64_t s) {
  if (s == 0) return 3;
  return 3 + static_cast<std::size_t>(std::llabs(s));
}

UnaryDecode unary_decode_offset(BitReader& in) {
  const std::size_t start = in.position();
  const auto first = in.read_bit();
  if (!first) return NeedMoreBits{};
  if (!*first) return PaddingBit{};
  const auto b1 = in.read_bit();
  const auto b2 = in.read_bit();
  if (!b1 || !b2) {
    in.seek(start);
    return NeedMoreBits{};
  }
  if (!*b1) {
    // "100" is zero; "101" is not a codeword, read it as zero too.
    return std::int64_t{0};
  }
  std::int64_t mag = 1;
  for (;;) {
    const auto b = in.read_bit();
    if (!b) {
      in.seek(start);
      return NeedMoreBits{};
    }
    if (!*b) break;
    ++mag;
  }
  return *b2 ? mag : -mag;
}

}  // namespace malab::codec
