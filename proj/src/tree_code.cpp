#include "malab/tree_code.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "malab/error.hpp"

namespace malab::channel {

TreeCode TreeCode::make(const DmcSpec& dmc, std::uint32_t a, std::uint32_t b, std::uint64_t seed) {
  dmc.validate();
  require(a >= 1 && b >= 1, ErrorKind::InvalidConfig, "tree code rate must be a positive fraction a/b");
  TreeCode c;
  c.bits_per_branch = a;
  c.uses_per_branch = b;
  c.seed = seed;
  const auto q = rdmath::is_symmetric(dmc) ? std::vector<double>(dmc.inputs(), 1.0 / static_cast<double>(dmc.inputs()))
                                           : rdmath::capacity_achieving_input(dmc);
  c.input_cdf = cumulative(q);
  return c;
}

std::uint64_t TreeCode::first_use(std::size_t depth) const {
  if (depth == 0) return 1;
  const std::uint64_t num = static_cast<std::uint64_t>(depth) * uses_per_branch;
  return std::max<std::uint64_t>(1, (num + bits_per_branch - 1) / bits_per_branch);
}

std::pair<std::uint32_t, std::uint32_t> parse_rate(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      const auto a = std::stoul(text);
      return {static_cast<std::uint32_t>(a), 1u};
    }
    const auto a = std::stoul(text.substr(0, slash));
    const auto b = std::stoul(text.substr(slash + 1));
    require(a >= 1 && b >= 1, ErrorKind::InvalidArgument, "rate must be a/b with a, b >= 1");
    return {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  } catch (const std::logic_error&) {
    fail(ErrorKind::InvalidArgument, "rate must look like a/b, got '" + text + "'");
  }
}

std::vector<std::uint32_t> tree_encode(const TreeCode& code, std::span<const std::uint8_t> bits, std::uint64_t horizon) {
  require(bits.size() >= code.bits_at(horizon), ErrorKind::InvalidArgument, "not enough message bits for the horizon");
  std::vector<std::uint32_t> out(horizon);
  std::uint64_t h = code.root();
  std::size_t depth = 0;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const std::size_t want = code.bits_at(t);
    while (depth < want) h = TreeCode::extend(h, bits[depth++] != 0);
    out[t - 1] = code.label(h, t);
  }
  return out;
}

namespace {

constexpr double kNone = -std::numeric_limits<double>::infinity();

bool better(double m, double cur) {
  if (cur == kNone) return m != kNone;
  return m > cur + 1e-9 * (1.0 + std::abs(cur));
}

struct Scanner {
  const TreeCode& code;
  const std::vector<std::vector<double>>& ll;
  std::span<const std::uint32_t> out;
  std::uint64_t horizon;
  std::size_t start_depth;
  std::size_t max_depth;
  MlScan& res;

  // Processes the uses of the branch at depth j for the node (h, m, path).
  double branch(std::size_t j, std::uint64_t h, double m, std::uint64_t path) {
    const std::uint64_t t0 = std::max(code.first_use(j), res.t_first);
    const std::uint64_t t1 = j == max_depth ? horizon : std::min(horizon, code.first_use(j + 1) - 1);
    for (std::uint64_t t = t0; t <= t1; ++t) {
      m += ll[code.label(h, t)][out[t - 1]];
      const std::size_t idx = t - res.t_first;
      if (better(m, res.metric[idx])) {
        res.metric[idx] = m;
        res.path[idx] = path;
        res.depth[idx] = static_cast<std::uint32_t>(j - start_depth);
      }
    }
    return m;
  }

  void visit(std::size_t j, std::uint64_t h, double m, std::uint64_t path) {
    m = branch(j, h, m, path);
    if (j == max_depth) return;
    visit(j + 1, TreeCode::extend(h, false), m, path);
    visit(j + 1, TreeCode::extend(h, true), m, path | (std::uint64_t{1} << (j - start_depth)));
  }
};

MlScan empty_scan(std::uint64_t t_first, std::uint64_t horizon) {
  MlScan r;
  r.t_first = t_first;
  const std::size_t len = horizon >= t_first ? horizon - t_first + 1 : 0;
  r.metric.assign(len, kNone);
  r.path.assign(len, 0);
  r.depth.assign(len, 0);
  return r;
}

}  // namespace

MlScan ml_scan(const TreeCode& code, const std::vector<std::vector<double>>& loglik, std::span<const std::uint32_t> outputs,
               std::uint64_t horizon, std::size_t start_depth, std::uint64_t start_hash, Exec exec) {
  require(outputs.size() >= horizon, ErrorKind::InvalidArgument, "fewer outputs than the horizon");
  const std::size_t max_depth = code.bits_at(horizon);
  require(max_depth >= start_depth, ErrorKind::InvalidArgument, "start depth beyond the horizon");
  require(max_depth - start_depth <= kMaxTreePathsLog2, ErrorKind::InvalidConfig,
          "tree search exceeds 2^20 paths; shorten the horizon or lower the rate");
  const std::uint64_t t_first = code.first_use(start_depth);
  MlScan res = empty_scan(t_first, horizon);
  if (res.metric.empty()) return res;

  const std::size_t span_depth = max_depth - start_depth;
  const std::size_t split = exec == Exec::Parallel ? std::min<std::size_t>(6, span_depth) : 0;
  if (split == 0) {
    Scanner s{code, loglik, outputs, horizon, start_depth, max_depth, res};
    s.visit(start_depth, start_hash, 0.0, 0);
    return res;
  }

  const std::size_t tasks = std::size_t{1} << split;
  std::vector<MlScan> local(tasks, res);
  for_each_index(tasks, Exec::Parallel, [&](std::size_t q) {
    Scanner s{code, loglik, outputs, horizon, start_depth, max_depth, local[q]};
    std::uint64_t h = start_hash, path = 0;
    double m = 0.0;
    for (std::size_t d = 0; d < split; ++d) {
      m = s.branch(start_depth + d, h, m, path);
      const bool bit = ((q >> (split - 1 - d)) & 1u) != 0;
      h = TreeCode::extend(h, bit);
      if (bit) path |= std::uint64_t{1} << d;
    }
    s.visit(start_depth + split, h, m, path);
  });
  for (std::size_t q = 0; q < tasks; ++q) {
    for (std::size_t i = 0; i < res.metric.size(); ++i) {
      if (better(local[q].metric[i], res.metric[i])) {
        res.metric[i] = local[q].metric[i];
        res.path[i] = local[q].path[i];
        res.depth[i] = local[q].depth[i];
      }
    }
  }
  return res;
}

AnytimeEstimate ml_decode_anytime(const TreeCode& code, const DmcSpec& dmc, std::span<const std::uint32_t> outputs,
                                  std::uint64_t horizon, Exec exec) {
  const auto ll = log_likelihoods(dmc);
  const MlScan s = ml_scan(code, ll, outputs, horizon, 0, code.root(), exec);
  AnytimeEstimate est;
  est.at_time.resize(horizon);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    auto& v = est.at_time[t - 1];
    const std::size_t i = t - s.t_first;
    v.resize(code.bits_at(t));
    for (std::size_t m = 0; m < v.size(); ++m) v[m] = static_cast<std::uint8_t>((s.path[i] >> m) & 1u);
  }
  return est;
}

AnytimeTable measure_anytime_reliability(const TreeCode& code, const DmcSpec& dmc, std::uint64_t horizon, std::size_t trials,
                                         const RandomSeeds& seeds, Exec exec) {
  require(trials >= 1 && horizon >= 1, ErrorKind::InvalidConfig, "need at least one trial and a positive horizon");
  const std::size_t nbits = code.bits_at(horizon);
  require(nbits >= 1, ErrorKind::InvalidConfig, "horizon too short to carry a bit");
  require(nbits <= kMaxTreePathsLog2, ErrorKind::InvalidConfig, "tree search exceeds 2^20 paths; shorten the horizon or lower the rate");
  const auto ll = log_likelihoods(dmc);
  const std::size_t max_delay = horizon - code.first_use(1);

  std::vector<std::vector<std::uint32_t>> per_trial(trials, std::vector<std::uint32_t>(max_delay + 1, 0));
  const CounterRng root = seeds.channel_rng();
  for_each_index(trials, exec, [&](std::size_t trial) {
    const CounterRng tr = root.fork(trial);
    CounterRng msg_rng = tr.fork("message");
    std::vector<std::uint8_t> msg(nbits);
    for (auto& b : msg) b = static_cast<std::uint8_t>(msg_rng() >> 63);
    const auto inputs = tree_encode(code, msg, horizon);
    const auto outputs = dmc_transmit(dmc, inputs, tr.fork("noise"));
    const MlScan s = ml_scan(code, ll, outputs, horizon, 0, code.root(), Exec::Serial);
    std::uint64_t truth = 0;
    for (std::size_t m = 0; m < nbits; ++m) truth |= static_cast<std::uint64_t>(msg[m]) << m;
    auto& ev = per_trial[trial];
    for (std::size_t i = 1; i <= nbits; ++i) {
      const std::uint64_t mask = (std::uint64_t{1} << i) - 1;
      for (std::uint64_t t = code.first_use(i); t <= horizon; ++t) {
        const std::size_t phi = t - code.first_use(i);
        ev[phi] += ((s.path[t - s.t_first] ^ truth) & mask) != 0;
      }
    }
  });

  AnytimeTable tab;
  tab.delay.resize(max_delay + 1);
  tab.events.assign(max_delay + 1, 0);
  tab.totals.assign(max_delay + 1, 0);
  tab.probability.assign(max_delay + 1, 0.0);
  for (std::size_t phi = 0; phi <= max_delay; ++phi) {
    tab.delay[phi] = static_cast<int>(phi);
    std::uint64_t count = 0;
    for (std::size_t i = 1; i <= nbits; ++i) count += code.first_use(i) + phi <= horizon;
    tab.totals[phi] = count * trials;
    for (const auto& ev : per_trial) tab.events[phi] += ev[phi];
    tab.probability[phi] = tab.totals[phi] ? static_cast<double>(tab.events[phi]) / static_cast<double>(tab.totals[phi]) : 0.0;
  }
  tab.fit = stats::fit_exponential_tail(tab.events, tab.totals);
  return tab;
}

WindowedDecode windowed_decode(const TreeCode& code, const DmcSpec& dmc, std::span<const std::uint32_t> outputs,
                               std::size_t window_bits, std::size_t commit_bits, Exec exec) {
  require(window_bits >= 1 && window_bits <= kMaxTreePathsLog2, ErrorKind::InvalidConfig, "window must be 1..20 bits");
  require(commit_bits >= 1 && commit_bits <= window_bits, ErrorKind::InvalidConfig, "commit chunk must be 1..window bits");
  const auto ll = log_likelihoods(dmc);
  const std::uint64_t T = outputs.size();
  WindowedDecode out;
  std::size_t j0 = 0;
  std::uint64_t h0 = code.root();
  const auto commit = [&](const MlScan& s, std::uint64_t t, std::size_t count) {
    const std::size_t i = t - s.t_first;
    for (std::size_t m = 0; m < count; ++m) {
      const bool bit = ((s.path[i] >> m) & 1u) != 0;
      out.bits.push_back(bit ? 1 : 0);
      out.commit_time.push_back(t);
      h0 = TreeCode::extend(h0, bit);
    }
    j0 += count;
  };
  for (;;) {
    // Decode once every use labelled by a full window of bits has arrived.
    const std::uint64_t t_d = code.first_use(j0 + window_bits + 1) - 1;
    if (t_d > T) break;
    const MlScan s = ml_scan(code, ll, outputs, t_d, j0, h0, exec);
    commit(s, t_d, commit_bits);
  }
  if (T >= code.first_use(j0) && code.bits_at(T) > j0) {
    const MlScan s = ml_scan(code, ll, outputs, T, j0, h0, exec);
    commit(s, T, code.bits_at(T) - j0);
  }
  return out;
}

}  // namespace malab::channel
