#include "malab/two_stream.hpp"

#include <cmath>

#include "malab/error.hpp"

namespace malab::codec {

double TwoStreamFrame::rate1() const {
  const std::size_t syms = main_trace.block_count() * main_trace.layout.n;
  if (syms == 0) return 0.0;
  return static_cast<double>(stream1.size() - init_stream_bits) / static_cast<double>(syms);
}

double TwoStreamFrame::rate2() const {
  const std::size_t syms = main_trace.block_count() * main_trace.layout.n;
  if (syms == 0) return 0.0;
  return static_cast<double>(stream2.size()) / static_cast<double>(syms);
}

TwoStreamFrame stationarize(const process::Trajectory& traj, const TwoStreamConfig& cfg, const HistoryCodec& history,
                            const RandomSeeds& seeds, Exec exec) {
  const auto& params = traj.params;
  const CheckpointLayout main_layout = CheckpointLayout::bounded(params, cfg.checkpoint);
  const double omega = std::get<process::BoundedUniform>(params.noise).omega;
  require(history.model().n == main_layout.n, ErrorKind::InvalidConfig, "history codec block length differs from n");

  TwoStreamFrame f;
  const std::size_t n = main_layout.n;
  if (cfg.stationarize) {
    CounterRng off = seeds.offset_rng();
    f.offset = static_cast<std::size_t>(off.uniform() * static_cast<double>(cfg.superblocks * n));
  }
  require(f.offset < params.horizon, ErrorKind::InvalidConfig, "horizon shorter than the initialization phase");

  // Initialization: X_0 by the initial frame, X_1..X_T by an n = 1 code.
  f.init_trace.layout = CheckpointLayout::minimal(params.lambda, omega, params.omega0, cfg.checkpoint.delta, 1);
  const auto& il = f.init_trace.layout;
  const DitherSource init_dither(seeds, il.delta);
  const double th0 = init_dither.init();
  f.init_trace.q_init = dithered_index(traj.x0, th0, il.delta, il.q_init);
  f.init_trace.init_value = static_cast<double>(f.init_trace.q_init) * il.delta - th0;
  f.init_trace.bits.push_uint(static_cast<std::uint64_t>(f.init_trace.q_init + il.q_init), il.init_bits);
  encode_blocks(il, init_dither, traj.x0 - f.init_trace.init_value, traj.noise, f.offset, f.init_trace);
  f.stream1 = f.init_trace.bits;
  f.init_stream_bits = f.stream1.size();

  // Main phase from time T; its dither lives past the initialization draws.
  f.main_trace.layout = main_layout;
  const DitherSource main_dither(seeds, main_layout.delta, 1 + 2 * f.offset);
  const std::size_t blocks = (params.horizon - 1 - f.offset) / n;
  encode_blocks(main_layout, main_dither, f.init_trace.errors[f.offset],
                std::span<const double>(traj.noise).subspan(f.offset), blocks, f.main_trace);
  f.stream1.append(f.main_trace.bits);

  f.zq.reserve(blocks);
  for (const auto& b : f.main_trace.blocks) f.zq.push_back(b.zq);
  history.encode(f.main_trace.history, f.zq, f.stream2, exec);
  return f;
}

Reconstruction reconstruct(const TwoStreamFrame& frame, const BitBuffer& stream1, const BitBuffer& stream2,
                           const HistoryCodec& history, const RandomSeeds& seeds) {
  Reconstruction out;
  const auto& il = frame.init_trace.layout;
  const auto& ml = frame.main_trace.layout;
  const std::size_t n = ml.n, T = frame.offset;
  const double lambda = ml.lambda;
  const DitherSource init_dither(seeds, il.delta);
  const DitherSource main_dither(seeds, ml.delta, 1 + 2 * T);

  BitReader in(stream1);
  const auto init_idx = in.read_uint(il.init_bits);
  if (!init_idx) return out;
  double xc = static_cast<double>(static_cast<std::int64_t>(*init_idx) - il.q_init) * il.delta - init_dither.init();
  // Divergence of the decoder's checkpoint from the encoder's.
  double eps = xc - frame.init_trace.init_value;
  out.error.reserve(frame.covered());
  out.value.reserve(frame.covered());
  for (std::size_t t = 0; t < T; ++t) {
    out.error.push_back(frame.init_trace.errors[t] - eps);
    out.value.push_back(xc);
    const auto idx = in.read_uint(il.block_bits);
    if (!idx) return out;
    const CheckpointBlock b = decode_block(il, init_dither, t, *idx);
    xc = lambda * xc + b.increment;
    eps = lambda * eps + (b.increment - frame.init_trace.blocks[t].increment);
  }

  std::vector<double> zq;
  std::vector<CheckpointBlock> blocks;
  for (std::size_t k = 0; k < frame.main_trace.block_count(); ++k) {
    const auto idx = in.read_uint(ml.block_bits);
    if (!idx) break;
    blocks.push_back(decode_block(ml, main_dither, k, *idx));
    zq.push_back(blocks.back().zq);
  }
  const auto T_hat = history.decode(stream2, zq, blocks.size());
  const double lam_n = std::pow(lambda, static_cast<double>(n));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    double lp = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t_hat = T_hat[k * n + i];
      const double err = frame.main_trace.history[k * n + i] - t_hat - lp * eps;
      out.error.push_back(std::isnan(err) ? std::numeric_limits<double>::infinity() : err);
      out.value.push_back(t_hat + lp * xc);
      lp *= lambda;
    }
    xc = lam_n * xc + blocks[k].increment;
    const double next = lam_n * eps + (blocks[k].increment - frame.main_trace.blocks[k].increment);
    eps = std::isnan(next) ? std::numeric_limits<double>::infinity() : next;
  }
  out.blocks_decoded = blocks.size();
  return out;
}

std::vector<double> reconstruct_gaussian_errors(const process::Trajectory& traj, const GaussianTrace& trace,
                                                const FifoResult& fifo, double drain_rate, const HistoryCodec& history,
                                                std::span<const double> history_decoded, std::size_t phi) {
  const auto& l = trace.checkpoints.layout;
  const std::size_t n = l.n, K = trace.checkpoints.block_count();
  const double lambda = l.lambda;
  std::vector<double> err(K * n);
  // Records available by the end of slot s: end_bit <= floor((s + 1) r).
  const auto available = [&](std::size_t record, std::size_t slot) {
    const auto bits = static_cast<std::size_t>(std::floor(static_cast<double>(slot + 1) * drain_rate));
    return fifo.end_bit[record] <= bits;
  };
  std::size_t last = 0;  // highest record index known to be available (monotone in time)
  bool any = false;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = k * n + i;
      const std::size_t deadline = t + phi;
      while (last + 1 < fifo.end_bit.size() && available(last + 1, deadline)) ++last;
      if (!any && available(0, deadline)) any = true;
      if (any && last >= k + 1) {
        const double t_hat = history_decoded.empty() ? history.prediction(trace.checkpoints.blocks[k].zq, i)
                                                     : history_decoded[t];
        err[t] = trace.checkpoints.history[t] - t_hat;
        continue;
      }
      // Extrapolate from checkpoint j = min(last, k): X_t - lambda^{t-jn} Xc_{jn}.
      double x;
      std::size_t from;
      if (!any) {
        x = traj.x0;
        from = 0;
      } else {
        const std::size_t j = std::min(last, k);
        x = trace.checkpoints.errors[j];
        from = j * n;
      }
      for (std::size_t m = from; m < t; ++m) x = lambda * x + traj.noise[m];
      err[t] = x;
    }
  }
  return err;
}

}  // namespace malab::codec
