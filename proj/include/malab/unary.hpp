#pragma once

#include <cstdint>
#include <variant>

#include "malab/bits.hpp"

namespace malab::codec {

/// Prefix-free offset code: "1", then "00" for zero, "11" for positive, "10"
/// for negative, then |s|-1 ones and a terminating zero.
void unary_encode_offset(std::int64_t s, BitBuffer& out);
BitBuffer unary_encode_offset(std::int64_t s);
std::size_t unary_length(std::int64_t s);

struct NeedMoreBits {};
struct PaddingBit {};  // a 0 where a codeword should start; one bit consumed

using UnaryDecode = std::variant<std::int64_t, PaddingBit, NeedMoreBits>;

/// Decodes one codeword (or one padding bit). On NeedMoreBits nothing is consumed.
UnaryDecode unary_decode_offset(BitReader& in);

}  // namespace malab::codec
