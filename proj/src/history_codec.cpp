#include "malab/history_codec.hpp"

#include <algorithm>
#include <cmath>

#include "malab/error.hpp"

namespace malab::codec {

double HistoryCodecSpec::rate_per_symbol() const {
  if (const auto* s = std::get_if<ScalarUniform>(&variant)) return s->bits_per_symbol;
  const auto& v = std::get<RandomCodebookVQ>(variant);
  return static_cast<double>(v.bits_per_block) / static_cast<double>(v.block_len);
}

HistoryModel HistoryModel::make(double lambda, std::size_t n, double delta, const process::NoiseModel& noise,
                                double clip_sigmas) {
  require(lambda > 1.0 && n >= 1 && delta > 0.0, ErrorKind::InvalidArgument, "bad history model");
  HistoryModel m{lambda, n, delta, noise, {}};
  m.support.resize(n);
  const bool bounded = process::is_bounded(noise);
  const double half_w = bounded ? 0.5 * std::get<process::BoundedUniform>(noise).omega : 0.0;
  const double sd_w = std::sqrt(process::noise_variance(noise));
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = std::pow(lambda, static_cast<double>(i) - static_cast<double>(n - 1)) * delta / 2.0;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t m2 = i; m2 + 2 <= n; ++m2) {
      const double c = std::pow(lambda, static_cast<double>(i) - 1.0 - static_cast<double>(m2));
      abs_sum += c;
      sq_sum += c * c;
    }
    m.support[i] = eps + (bounded ? half_w * abs_sum : clip_sigmas * sd_w * std::sqrt(sq_sum));
  }
  return m;
}

void HistoryModel::draw_residual(CounterRng& rng, std::size_t first, std::span<double> out) const {
  // r_i = lambda^{i-n+1} eps - sum_{m=i}^{n-2} lambda^{i-1-m} W_m, built backwards.
  const double eps = delta * (rng.uniform() - 0.5);
  std::vector<double> r(n);
  r[n - 1] = eps;
  for (std::size_t i = n - 1; i-- > first;) {
    const double w = process::draw_noise(noise, rng);
    r[i] = (r[i + 1] - w) / lambda;
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = r[first + j];
}

HistoryCodec::HistoryCodec(HistoryCodecSpec spec, HistoryModel model) : spec_(std::move(spec)), model_(std::move(model)) {
  const std::size_t n = model_.n;
  lambda_pow_.resize(n);
  for (std::size_t i = 0; i < n; ++i) lambda_pow_[i] = std::pow(model_.lambda, static_cast<double>(i) - static_cast<double>(n - 1));
  if (const auto* s = std::get_if<ScalarUniform>(&spec_.variant)) {
    require(s->bits_per_symbol >= 0 && s->bits_per_symbol <= 24, ErrorKind::InvalidConfig, "scalar history rate must be 0..24 bits");
    bits_per_block_ = static_cast<std::size_t>(s->bits_per_symbol) * n;
    return;
  }
  const auto& v = std::get<RandomCodebookVQ>(spec_.variant);
  require(v.block_len >= 1 && v.block_len <= 8, ErrorKind::InvalidConfig, "VQ block length must be 1..8");
  require(v.bits_per_block >= 0 && v.bits_per_block <= 16, ErrorKind::InvalidConfig, "VQ bits per block must be 0..16");
  require(n % v.block_len == 0, ErrorKind::InvalidConfig, "VQ block length must divide n");
  const std::size_t slots = n / v.block_len;
  bits_per_block_ = slots * static_cast<std::size_t>(v.bits_per_block);
  const std::size_t size = std::size_t{1} << v.bits_per_block;
  codebooks_.resize(slots);
  const CounterRng root(stream_key(v.codebook_seed, "history_codebook"));
  for (std::size_t s = 0; s < slots; ++s) {
    auto& cb = codebooks_[s];
    cb.resize(size * v.block_len);
    CounterRng rng = root.fork(s);
    for (std::size_t c = 0; c < size; ++c) {
      model_.draw_residual(rng, s * v.block_len, std::span<double>(cb).subspan(c * v.block_len, v.block_len));
    }
  }
}

double HistoryCodec::prediction(double zq, std::size_t i) const { return lambda_pow_[i] * zq; }

void HistoryCodec::encode(std::span<const double> blocks, std::span<const double> zq, BitBuffer& out, Exec exec) const {
  const std::size_t n = model_.n;
  require(blocks.size() == zq.size() * n, ErrorKind::InvalidArgument, "history blocks and side information disagree");
  const std::size_t K = zq.size();
  std::vector<double> resid(blocks.size());
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < n; ++i) resid[k * n + i] = blocks[k * n + i] - prediction(zq[k], i);

  if (const auto* s = std::get_if<ScalarUniform>(&spec_.variant)) {
    const int b = s->bits_per_symbol;
    if (b == 0) return;
    const auto levels = std::uint64_t{1} << b;
    for (std::size_t j = 0; j < resid.size(); ++j) {
      const double range = model_.support[j % n];
      const double step = 2.0 * range / static_cast<double>(levels);
      const double pos = std::floor((resid[j] + range) / step);
      const auto idx = static_cast<std::uint64_t>(std::clamp(pos, 0.0, static_cast<double>(levels - 1)));
      out.push_uint(idx, b);
    }
    return;
  }
  const auto& v = std::get<RandomCodebookVQ>(spec_.variant);
  if (v.bits_per_block == 0) return;
  const std::size_t L = v.block_len, slots = n / L;
  std::vector<std::vector<std::uint32_t>> chosen(slots);
  std::vector<double> vecs(K * L);
  for (std::size_t s = 0; s < slots; ++s) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < L; ++j) vecs[k * L + j] = resid[k * n + s * L + j];
    chosen[s] = nearest_codewords(vecs, codebooks_[s], L, exec).index;
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t s = 0; s < slots; ++s) out.push_uint(chosen[s][k], v.bits_per_block);
}

void HistoryCodec::decode_block(BitReader& in, double zq, std::span<double> out) const {
  const std::size_t n = model_.n;
  for (std::size_t i = 0; i < n; ++i) out[i] = prediction(zq, i);
  if (in.remaining() < bits_per_block_) {
    in.seek(in.position() + in.remaining());
    return;
  }
  if (const auto* s = std::get_if<ScalarUniform>(&spec_.variant)) {
    const int b = s->bits_per_symbol;
    if (b == 0) return;
    const auto levels = std::uint64_t{1} << b;
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = *in.read_uint(b);
      const double range = model_.support[i];
      const double step = 2.0 * range / static_cast<double>(levels);
      out[i] += -range + (static_cast<double>(idx) + 0.5) * step;
    }
    return;
  }
  const auto& v = std::get<RandomCodebookVQ>(spec_.variant);
  if (v.bits_per_block == 0) return;
  const std::size_t L = v.block_len;
  for (std::size_t s = 0; s < n / L; ++s) {
    const auto idx = *in.read_uint(v.bits_per_block);
    for (std::size_t j = 0; j < L; ++j) out[s * L + j] += codebooks_[s][idx * L + j];
  }
}

std::vector<double> HistoryCodec::decode(const BitBuffer& bits, std::span<const double> zq, std::size_t blocks) const {
  require(zq.size() >= blocks, ErrorKind::InvalidArgument, "missing side information");
  const std::size_t n = model_.n;
  std::vector<double> out(blocks * n);
  BitReader in(bits);
  for (std::size_t k = 0; k < blocks; ++k) decode_block(in, zq[k], std::span<double>(out).subspan(k * n, n));
  return out;
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), ErrorKind::InvalidArgument, "mean_squared_error: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace malab::codec
