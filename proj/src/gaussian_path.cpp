#include "malab/gaussian_path.hpp"

#include <bit>
#include <cmath>
#include <deque>

#include "malab/error.hpp"
#include "malab/unary.hpp"

namespace malab::codec {

void GaussianCheckpointConfig::validate() const {
  require(n >= 1 && delta > 0.0 && eps1 > 0.0 && eps_q > 0.0, ErrorKind::InvalidConfig, "bad Gaussian checkpoint config");
}

double GaussianCheckpointConfig::l_scale() const { return std::exp2(eps1 * static_cast<double>(n) / 3.0); }

GaussianLayout GaussianLayout::make(const process::ProcessParams& params, const GaussianCheckpointConfig& cfg) {
  cfg.validate();
  params.validate();
  const auto* g = std::get_if<process::Gaussian>(&params.noise);
  require(g != nullptr, ErrorKind::InvalidConfig, "Gaussian checkpoint code needs Gaussian noise");
  GaussianLayout gl;
  const double lambda = params.lambda;
  gl.sigma = g->sigma;
  gl.l = cfg.l_scale();
  gl.sigma_tilde = std::pow(lambda, static_cast<double>(cfg.n)) * g->sigma / std::sqrt(lambda * lambda - 1.0);
  gl.step = gl.l * gl.sigma_tilde;

  auto& b = gl.base;
  b.lambda = lambda;
  b.n = cfg.n;
  b.delta = cfg.delta;
  const double lam_n = std::pow(lambda, static_cast<double>(cfg.n));
  // After removing the offset the block noise lies in (-step, step).
  b.q_main = static_cast<std::int64_t>(std::floor((lam_n * cfg.delta / 2.0 + gl.step + cfg.delta / 2.0) / cfg.delta + 0.5));
  b.prev_clamp = cfg.n == 1 ? 0.0 : 6.0 * gl.l * g->sigma / lambda;
  b.q_prev = cfg.n == 1 ? 0 : static_cast<std::int64_t>(std::floor((b.prev_clamp + cfg.delta / 2.0) / cfg.delta + 0.5));
  b.q_init = static_cast<std::int64_t>(std::floor((params.omega0 / 2.0 + cfg.delta / 2.0) / cfg.delta + 0.5));
  const double cells = static_cast<double>(b.cells_main()) * static_cast<double>(b.cells_prev());
  require(cells < 0x1.0p62, ErrorKind::InvalidConfig, "Gaussian checkpoint index does not fit in 62 bits");
  const auto c = b.cells_main() * b.cells_prev();
  b.block_bits = c <= 1 ? 0 : std::bit_width(c - 1);
  const auto ci = static_cast<std::uint64_t>(2 * b.q_init + 1);
  b.init_bits = ci <= 1 ? 0 : std::bit_width(ci - 1);
  return gl;
}

double GaussianLayout::drain_rate(const GaussianCheckpointConfig& cfg) const {
  return (static_cast<double>(base.block_bits) + 3.0) / static_cast<double>(base.n) + cfg.eps_q;
}

std::int64_t gaussian_offset(double block_noise, double step) {
  const double m = std::floor(std::abs(block_noise) / step);
  return static_cast<std::int64_t>(std::copysign(m, block_noise));
}

GaussianTrace encode_checkpoints_gaussian(const process::Trajectory& traj, const GaussianCheckpointConfig& cfg,
                                          const RandomSeeds& seeds) {
  GaussianTrace out;
  out.layout = GaussianLayout::make(traj.params, cfg);
  const auto& l = out.layout.base;
  const double lambda = l.lambda, delta = l.delta, step = out.layout.step;
  const std::size_t n = l.n;
  const DitherSource dither(seeds, delta);
  auto& tr = out.checkpoints;
  tr.layout = l;

  const double th0 = dither.init();
  tr.q_init = dithered_index(traj.x0, th0, delta, l.q_init);
  tr.init_value = static_cast<double>(tr.q_init) * delta - th0;
  BitBuffer init;
  init.push(true);
  init.push_uint(static_cast<std::uint64_t>(tr.q_init + l.q_init), l.init_bits);
  out.records.push_back(std::move(init));
  out.arrival.push_back(0.0);

  const std::size_t blocks = (traj.params.horizon - 1) / n;
  double e = traj.x0 - tr.init_value;
  tr.errors.push_back(e);
  for (std::size_t k = 0; k < blocks; ++k) {
    double xt = e, wt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      tr.history.push_back(xt);
      const double w = traj.noise[k * n + i];
      xt = lambda * xt + w;
      wt = lambda * wt + w;
    }
    const std::int64_t s = gaussian_offset(wt, step);
    const double shift = static_cast<double>(s) * step;
    CheckpointBlock blk;
    const double th = dither.main(k);
    blk.q_main = dithered_index(xt - shift, th, delta, l.q_main);
    blk.increment = shift + static_cast<double>(blk.q_main) * delta - th;
    const double e_next = xt - blk.increment;
    const double w_last = traj.noise[k * n + n - 1];
    double prev_err = e;
    if (n == 1) {
      blk.prev_rel = -blk.increment / lambda;
    } else {
      double v = (e_next - w_last) / lambda;
      if (std::abs(v) > l.prev_clamp) {
        v = std::copysign(l.prev_clamp, v);
        ++tr.clamp_events;
      }
      const double tp = dither.prev(k);
      blk.q_prev = dithered_index(v, tp, delta, l.q_prev);
      blk.prev_rel = static_cast<double>(blk.q_prev) * delta - tp;
      prev_err = (e_next - w_last) / lambda - blk.prev_rel;
    }
    blk.zq = blk.increment / lambda + blk.prev_rel;

    BitBuffer rec;
    unary_encode_offset(s, rec);
    rec.push_uint(static_cast<std::uint64_t>(blk.q_main + l.q_main) * l.cells_prev() +
                      static_cast<std::uint64_t>(blk.q_prev + l.q_prev),
                  l.block_bits);
    out.records.push_back(std::move(rec));
    out.arrival.push_back(static_cast<double>((k + 1) * n));
    out.offsets.push_back(s);
    tr.blocks.push_back(blk);
    tr.errors.push_back(e_next);
    tr.prev_errors.push_back(prev_err);
    e = e_next;
  }
  return out;
}

FifoResult fifo_smooth(const std::vector<BitBuffer>& records, const std::vector<double>& arrival, double rate,
                       std::size_t cap_bits) {
  require(records.size() == arrival.size(), ErrorKind::InvalidArgument, "records and arrival times disagree");
  require(rate > 0.0, ErrorKind::InvalidArgument, "FIFO rate must be > 0");
  FifoResult out;
  const std::size_t R = records.size();
  out.end_bit.assign(R, 0);
  out.delay_symbols.assign(R, 0);
  out.delay_bits.assign(R, 0);
  out.wait_bits.assign(R, 0);

  struct Pending {
    std::size_t record;
    std::size_t next_bit;
    std::size_t arrival_slot;
    std::size_t arrival_pos;
  };
  std::deque<Pending> queue;
  std::size_t backlog = 0, next = 0, done = 0;
  for (std::size_t t = 0; done < R; ++t) {
    while (next < R && arrival[next] <= static_cast<double>(t)) {
      out.wait_bits[next] = static_cast<std::int64_t>(backlog);
      queue.push_back({next, 0, t, out.stream.size()});
      backlog += records[next].size();
      if (backlog > cap_bits) ++out.overflow_events;
      out.max_backlog = std::max(out.max_backlog, backlog);
      ++next;
    }
    const auto budget = static_cast<std::size_t>(std::floor(static_cast<double>(t + 1) * rate)) -
                        static_cast<std::size_t>(std::floor(static_cast<double>(t) * rate));
    for (std::size_t b = 0; b < budget; ++b) {
      if (queue.empty()) {
        out.stream.push(false);
        continue;
      }
      auto& p = queue.front();
      out.stream.push(records[p.record][p.next_bit++]);
      --backlog;
      if (p.next_bit == records[p.record].size()) {
        out.end_bit[p.record] = out.stream.size();
        out.delay_symbols[p.record] = static_cast<std::int64_t>(t - p.arrival_slot);
        out.delay_bits[p.record] = static_cast<std::int64_t>(out.stream.size() - p.arrival_pos);
        queue.pop_front();
        ++done;
      }
    }
    // Zero-length records complete on arrival.
    while (!queue.empty() && records[queue.front().record].empty()) {
      out.end_bit[queue.front().record] = out.stream.size();
      queue.pop_front();
      ++done;
    }
  }
  return out;
}

GaussianDecoded decode_checkpoints_gaussian(const BitBuffer& stream, const GaussianLayout& layout, const RandomSeeds& seeds,
                                            std::size_t max_blocks) {
  GaussianDecoded out;
  const auto& l = layout.base;
  const DitherSource dither(seeds, l.delta);
  BitReader in(stream);
  // Initial frame: a start bit then the init index.
  for (;;) {
    const auto b = in.read_bit();
    if (!b) return out;
    if (*b) break;
  }
  const auto init = in.read_uint(l.init_bits);
  if (!init) return out;
  out.init_value = static_cast<double>(static_cast<std::int64_t>(*init) - l.q_init) * l.delta - dither.init();
  out.end_bit.push_back(in.position());
  while (out.blocks.size() < max_blocks) {
    const std::size_t start = in.position();
    const auto off = unary_decode_offset(in);
    if (std::holds_alternative<NeedMoreBits>(off)) break;
    if (std::holds_alternative<PaddingBit>(off)) continue;
    const auto idx = in.read_uint(l.block_bits);
    if (!idx) {
      in.seek(start);
      break;
    }
    const std::size_t k = out.blocks.size();
    CheckpointBlock blk = decode_block(l, dither, k, *idx);
    const double shift = static_cast<double>(std::get<std::int64_t>(off)) * layout.step;
    blk.increment += shift;
    blk.zq = blk.increment / l.lambda + blk.prev_rel;
    out.blocks.push_back(blk);
    out.end_bit.push_back(in.position());
  }
  return out;
}

}  // namespace malab::codec
