#include "malab/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "malab/error.hpp"

namespace malab::codec {

namespace {

int bits_for(std::uint64_t cells) {
  if (cells <= 1) return 0;
  return std::bit_width(cells - 1);
}

std::int64_t half_range(double reach, double delta) {
  return static_cast<std::int64_t>(std::floor(reach / delta + 0.5));
}

}  // namespace

void CheckpointConfig::validate() const {
  require(n >= 1, ErrorKind::InvalidConfig, "n must be >= 1");
  require(std::isfinite(delta) && delta > 0.0, ErrorKind::InvalidConfig, "delta must be > 0");
  require(r1_bits_per_block >= 1 && r1_bits_per_block <= 62, ErrorKind::InvalidConfig, "r1 bits per block must be in [1, 62]");
  require(eta > 0.0, ErrorKind::InvalidConfig, "eta must be > 0");
}

double required_checkpoint_rate(double lambda, double omega, double omega0, double delta, std::size_t n) {
  require(lambda > 1.0 && omega > 0.0 && omega0 >= 0.0 && delta > 0.0 && n >= 1, ErrorKind::InvalidArgument,
          "required_checkpoint_rate: arguments must be positive with lambda > 1");
  const double nn = static_cast<double>(n);
  const double main = std::log2(lambda) +
                      (std::log2(1.0 + omega / (delta * (lambda - 1.0))) + std::log2(2.0 + omega / delta)) / nn;
  const double init = std::log2(std::max(1.0, std::ceil(omega0 / delta))) / nn;
  return std::max(main, init);
}

CheckpointLayout CheckpointLayout::minimal(double lambda, double omega, double omega0, double delta, std::size_t n) {
  CheckpointLayout l;
  l.lambda = lambda;
  l.n = n;
  l.delta = delta;
  const double lam_n = std::pow(lambda, static_cast<double>(n));
  const double jump = lam_n * omega / (2.0 * (lambda - 1.0));
  l.q_main = half_range(lam_n * delta / 2.0 + jump + delta / 2.0, delta);
  l.q_prev = n == 1 ? 0 : half_range((delta + omega) / (2.0 * lambda) + delta / 2.0, delta);
  l.q_init = half_range(omega0 / 2.0 + delta / 2.0, delta);
  require(static_cast<double>(l.cells_main()) * static_cast<double>(l.cells_prev()) < 0x1.0p62, ErrorKind::InvalidConfig,
          "checkpoint index does not fit in 62 bits; reduce n or increase delta");
  l.block_bits = bits_for(l.cells_main() * l.cells_prev());
  l.init_bits = bits_for(static_cast<std::uint64_t>(2 * l.q_init + 1));
  return l;
}

CheckpointLayout CheckpointLayout::bounded(const process::ProcessParams& params, const CheckpointConfig& cfg) {
  cfg.validate();
  params.validate();
  const auto* noise = std::get_if<process::BoundedUniform>(&params.noise);
  require(noise != nullptr, ErrorKind::InvalidConfig, "bounded checkpoint code needs uniform noise");
  const double need = required_checkpoint_rate(params.lambda, noise->omega, params.omega0, cfg.delta, cfg.n);
  require(static_cast<double>(cfg.r1_bits_per_block) >= static_cast<double>(cfg.n) * need - 1e-9, ErrorKind::InvalidConfig,
          "r1 bits per block below the required checkpoint rate");
  CheckpointLayout l = minimal(params.lambda, noise->omega, params.omega0, cfg.delta, cfg.n);
  require(l.block_bits <= cfg.r1_bits_per_block, ErrorKind::InvalidConfig,
          "checkpoint index needs more bits than r1 bits per block");
  l.block_bits = cfg.r1_bits_per_block;
  return l;
}

std::int64_t dithered_index(double x, double dither, double delta, std::int64_t q) {
  const double r = std::nearbyint((x + dither) / delta);
  const double c = std::clamp(r, -static_cast<double>(q), static_cast<double>(q));
  return static_cast<std::int64_t>(c);
}

void encode_blocks(const CheckpointLayout& layout, const DitherSource& dither, double e_start,
                   std::span<const double> noise, std::size_t blocks, CheckpointTrace& trace) {
  const std::size_t n = layout.n;
  require(noise.size() >= blocks * n, ErrorKind::InvalidArgument, "not enough noise for the requested blocks");
  const double lambda = layout.lambda, delta = layout.delta;
  const std::size_t k0 = trace.blocks.size();
  if (trace.errors.empty()) trace.errors.push_back(e_start);
  double e = e_start;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t k = k0 + b;
    const auto w = noise.subspan(b * n, n);
    double xt = e;
    for (std::size_t i = 0; i < n; ++i) {
      trace.history.push_back(xt);
      xt = lambda * xt + w[i];
    }
    CheckpointBlock blk;
    const double th = dither.main(k);
    blk.q_main = dithered_index(xt, th, delta, layout.q_main);
    blk.increment = static_cast<double>(blk.q_main) * delta - th;
    const double e_next = xt - blk.increment;

    double prev_err;
    if (n == 1) {
      blk.prev_rel = -blk.increment / lambda;
      prev_err = e;
    } else {
      double v = (e_next - w[n - 1]) / lambda;  // X_{(k+1)n-1} - Xc_{(k+1)n} / lambda
      if (layout.prev_clamp > 0.0 && std::abs(v) > layout.prev_clamp) {
        v = std::copysign(layout.prev_clamp, v);
        ++trace.clamp_events;
      }
      const double tp = dither.prev(k);
      blk.q_prev = dithered_index(v, tp, delta, layout.q_prev);
      blk.prev_rel = static_cast<double>(blk.q_prev) * delta - tp;
      prev_err = (e_next - w[n - 1]) / lambda - blk.prev_rel;
    }
    blk.zq = blk.increment / lambda + blk.prev_rel;

    const auto index = static_cast<std::uint64_t>(blk.q_main + layout.q_main) * layout.cells_prev() +
                       static_cast<std::uint64_t>(blk.q_prev + layout.q_prev);
    trace.bits.push_uint(index, layout.block_bits);
    trace.blocks.push_back(blk);
    trace.errors.push_back(e_next);
    trace.prev_errors.push_back(prev_err);
    e = e_next;
  }
}

CheckpointTrace encode_checkpoints(const process::Trajectory& traj, const CheckpointConfig& cfg, const RandomSeeds& seeds) {
  CheckpointTrace trace;
  trace.layout = CheckpointLayout::bounded(traj.params, cfg);
  const auto& l = trace.layout;
  const DitherSource dither(seeds, l.delta);
  const double th0 = dither.init();
  trace.q_init = dithered_index(traj.x0, th0, l.delta, l.q_init);
  trace.init_value = static_cast<double>(trace.q_init) * l.delta - th0;
  trace.bits.push_uint(static_cast<std::uint64_t>(trace.q_init + l.q_init), l.init_bits);
  const std::size_t blocks = (traj.params.horizon - 1) / l.n;
  encode_blocks(l, dither, traj.x0 - trace.init_value, traj.noise, blocks, trace);
  return trace;
}

CheckpointBlock decode_block(const CheckpointLayout& layout, const DitherSource& dither, std::size_t k, std::uint64_t index) {
  CheckpointBlock blk;
  const std::uint64_t cp = layout.cells_prev();
  const auto main = static_cast<std::int64_t>(std::min(index / cp, layout.cells_main() - 1));
  blk.q_main = main - layout.q_main;
  blk.q_prev = static_cast<std::int64_t>(index % cp) - layout.q_prev;
  blk.increment = static_cast<double>(blk.q_main) * layout.delta - dither.main(k);
  if (layout.n == 1) {
    blk.prev_rel = -blk.increment / layout.lambda;
  } else {
    blk.prev_rel = static_cast<double>(blk.q_prev) * layout.delta - dither.prev(k);
  }
  blk.zq = blk.increment / layout.lambda + blk.prev_rel;
  return blk;
}

DecodedCheckpoints decode_checkpoints(const BitBuffer& bits, const CheckpointLayout& layout, const RandomSeeds& seeds,
                                      std::size_t up_to_blocks) {
  DecodedCheckpoints out;
  if (bits.empty()) {
    out.needs_more_bits = up_to_blocks > 0;
    return out;
  }
  const DitherSource dither(seeds, layout.delta);
  BitReader in(bits);
  const auto init = in.read_uint(layout.init_bits);
  if (!init) {
    out.needs_more_bits = true;
    return out;
  }
  out.q_init = std::min<std::int64_t>(static_cast<std::int64_t>(*init), 2 * layout.q_init) - layout.q_init;
  out.init_value = static_cast<double>(out.q_init) * layout.delta - dither.init();
  for (std::size_t k = 0; k < up_to_blocks; ++k) {
    const auto idx = in.read_uint(layout.block_bits);
    if (!idx) {
      out.needs_more_bits = true;
      break;
    }
    out.blocks.push_back(decode_block(layout, dither, k, *idx));
  }
  return out;
}

std::vector<double> normalize_history(const process::Trajectory& traj, const CheckpointTrace& trace) {
  const std::size_t n = trace.layout.n;
  const double lambda = trace.layout.lambda;
  std::vector<double> out;
  out.reserve(trace.block_count() * n);
  for (std::size_t k = 0; k < trace.block_count(); ++k) {
    double xt = trace.errors[k];
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(xt);
      xt = lambda * xt + traj.noise[k * n + i];
    }
  }
  return out;
}

double shifted_endpoint(const CheckpointTrace& trace, std::size_t k) {
  require(k < trace.block_count(), ErrorKind::InvalidArgument, "block not encoded yet");
  return trace.blocks[k].zq;
}

std::vector<std::pair<double, double>> absolute_checkpoints(const CheckpointLayout& layout, double init_value,
                                                            std::span<const CheckpointBlock> blocks) {
  const double lam_n = std::pow(layout.lambda, static_cast<double>(layout.n));
  std::vector<std::pair<double, double>> out;
  out.reserve(blocks.size() + 1);
  out.emplace_back(init_value, init_value);
  double x = init_value;
  for (const auto& b : blocks) {
    x = lam_n * x + b.increment;
    out.emplace_back(x / layout.lambda + b.prev_rel, x);
  }
  return out;
}

}  // namespace malab::codec
