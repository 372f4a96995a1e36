#include "malab/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "malab/channel.hpp"
#include "malab/error.hpp"
#include "malab/rdmath.hpp"
#include "malab/stats.hpp"
#include "malab/tree_code.hpp"
#include "malab/two_stream.hpp"

namespace malab::harness {

namespace {

constexpr const char* kScenarioNames[] = {"noiseless-rd", "e2e-anytime", "e2e-naive", "phase-transition", "embed-reduction",
                                          "queue"};

double parse_double(const std::string& key, const std::string& text) {
  // Accepts plain numbers and simple fractions like 1/32.
  const auto slash = text.find('/');
  if (slash != std::string::npos) return parse_double(key, text.substr(0, slash)) / parse_double(key, text.substr(slash + 1));
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && p == end, ErrorKind::InvalidConfig, "parameter " + key + " is not a number: '" + text + "'");
  return v;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ResultRecord start_record(const ExperimentConfig& cfg) {
  ResultRecord r;
  r.scenario = to_string(cfg.scenario);
  r.parameters = cfg.parameters;
  r.seed = cfg.seed;
  return r;
}

// Source shared by the bounded-noise scenarios.
struct BoundedSetup {
  process::ProcessParams params;
  codec::TwoStreamConfig two;
  double sigma = 0.0;  // standard deviation of the driving noise
};

BoundedSetup bounded_setup(const ExperimentConfig& cfg, double lambda, double delta, std::size_t n, std::size_t symbols) {
  BoundedSetup s;
  const double omega = cfg.get("omega", 1.0);
  s.params.lambda = cfg.get("lambda", lambda);
  s.params.noise = process::BoundedUniform{omega};
  s.params.omega0 = cfg.get("omega0", omega);
  s.params.horizon = static_cast<std::size_t>(cfg.get_int("symbols", static_cast<long long>(symbols))) + 1;
  s.params.validate();
  s.two.checkpoint.n = static_cast<std::size_t>(cfg.get_int("n", static_cast<long long>(n)));
  s.two.checkpoint.delta = cfg.get("delta", delta);
  const double req = codec::required_checkpoint_rate(s.params.lambda, omega, s.params.omega0, s.two.checkpoint.delta, s.two.checkpoint.n);
  const auto r1_min = static_cast<long long>(std::ceil(static_cast<double>(s.two.checkpoint.n) * req - 1e-9));
  s.two.checkpoint.r1_bits_per_block = static_cast<int>(cfg.get_int("r1", r1_min));
  s.two.checkpoint.validate();
  s.two.superblocks = static_cast<std::size_t>(cfg.get_int("superblocks", 8));
  s.sigma = omega / std::sqrt(12.0);
  return s;
}

codec::HistoryCodec vq_codec(const BoundedSetup& s, std::size_t block_len, int bits, std::uint64_t seed) {
  codec::HistoryCodecSpec spec;
  spec.variant = codec::RandomCodebookVQ{block_len, bits, seed};
  const auto model = codec::HistoryModel::make(s.params.lambda, s.two.checkpoint.n, s.two.checkpoint.delta, s.params.noise);
  return codec::HistoryCodec(spec, model);
}

double mean_of_squares(const std::vector<double>& e, std::size_t from) {
  if (from >= e.size()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (std::size_t t = from; t < e.size(); ++t) acc += e[t] * e[t];
  return acc / static_cast<double>(e.size() - from);
}

std::vector<double> squares(const std::vector<double>& e) {
  std::vector<double> d(e.size());
  for (std::size_t t = 0; t < e.size(); ++t) d[t] = e[t] * e[t];
  return d;
}

std::vector<std::uint8_t> as_bits(const BitBuffer& b) { return b.raw(); }

}  // namespace

std::string to_string(Scenario s) { return kScenarioNames[static_cast<int>(s)]; }

Scenario parse_scenario(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kScenarioNames[i]) return static_cast<Scenario>(i);
  fail(ErrorKind::InvalidConfig, "unknown scenario '" + name + "'");
}

double ExperimentConfig::get(const std::string& key, double fallback) const {
  const auto it = parameters.find(key);
  return it == parameters.end() ? fallback : parse_double(key, it->second);
}

long long ExperimentConfig::get_int(const std::string& key, long long fallback) const {
  const auto it = parameters.find(key);
  if (it == parameters.end()) return fallback;
  const double v = parse_double(key, it->second);
  require(std::isfinite(v) && v == std::floor(v), ErrorKind::InvalidConfig, "parameter " + key + " must be an integer");
  return static_cast<long long>(v);
}

std::string ExperimentConfig::get_str(const std::string& key, const std::string& fallback) const {
  const auto it = parameters.find(key);
  return it == parameters.end() ? fallback : it->second;
}

std::vector<double> ExperimentConfig::get_list(const std::string& key, std::vector<double> fallback) const {
  const auto it = parameters.find(key);
  if (it == parameters.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  require(!out.empty(), ErrorKind::InvalidConfig, "parameter " + key + " is an empty list");
  return out;
}

std::vector<double> block_means(const std::vector<double>& xs, std::size_t block) {
  require(block >= 1, ErrorKind::InvalidArgument, "block length must be positive");
  std::vector<double> out;
  for (std::size_t b = 0; (b + 1) * block <= xs.size(); ++b) {
    double acc = 0.0;
    for (std::size_t i = b * block; i < (b + 1) * block; ++i) acc += xs[i];
    out.push_back(std::isnan(acc) ? std::numeric_limits<double>::infinity() : acc / static_cast<double>(block));
  }
  return out;
}

ResultRecord run_rd_experiment(const ExperimentConfig& cfg) {
  const Timer timer;
  ResultRecord rec = start_record(cfg);
  const auto s = bounded_setup(cfg, 2.0, 1.0 / 16.0, 32, 6400);
  const auto seeds = cfg.seeds();
  const auto block_len = static_cast<std::size_t>(cfg.get_int("vq_block", 4));
  const auto sweep = cfg.get_list("sweep", {0, 2, 4, 6, 8});
  const double lambda = s.params.lambda, log_lambda = std::log2(lambda);
  const auto traj = process::simulate_forward(s.params, seeds);

  rec.series.columns = {"history_bits", "rate1", "rate2", "rate_total", "distortion", "bound_rate", "bound_margin",
                        "gap_history", "gap_total"};
  double min_margin = std::numeric_limits<double>::infinity();
  for (double bits : sweep) {
    const auto history = vq_codec(s, block_len, static_cast<int>(bits), seeds.codebook);
    const auto frame = codec::stationarize(traj, s.two, history, seeds, Exec::Parallel);
    const auto r = codec::reconstruct(frame, frame.stream1, frame.stream2, history, seeds);
    const double d = mean_of_squares(r.error, frame.offset);
    const double r1 = frame.rate1(), r2 = frame.rate2(), total = r1 + r2;
    const double bound = rdmath::rate_at_distortion(lambda, s.sigma, d);
    // Gap in distortion against the curve at log2(lambda) + R2 and at the total rate.
    const double gap_h = d / rdmath::distortion_at_rate(lambda, s.sigma, log_lambda + r2);
    const double gap_t = d / rdmath::distortion_at_rate(lambda, s.sigma, total);
    min_margin = std::min(min_margin, total - bound);
    rec.series.rows.push_back({bits, r1, r2, total, d, bound, total - bound, gap_h, gap_t});
    if (bits == 0) {
      // Extrapolating each block from its own checkpoint alone.
      const auto& h = frame.main_trace.history;
      rec.set("zero_rate_distortion", d);
      rec.set("extrapolation_distortion", mean_of_squares(h, 0));
    }
  }
  rec.set("rate1_configured", static_cast<double>(s.two.checkpoint.r1_bits_per_block) / static_cast<double>(s.two.checkpoint.n));
  rec.set("rate1_measured", rec.series.rows.front()[1]);
  rec.set("min_bound_margin", min_margin);
  rec.set("sigma", s.sigma);
  rec.wall_seconds = timer.seconds();
  return rec;
}

ResultRecord run_e2e(const ExperimentConfig& cfg) {
  const Timer timer;
  ResultRecord rec = start_record(cfg);
  const bool anytime = cfg.scenario != Scenario::E2eNaive;
  const auto s = bounded_setup(cfg, std::sqrt(2.0), 0.25, 32, 10000);
  const auto seeds = cfg.seeds();
  const auto dmc = channel::parse_channel(cfg.get_str("channel", "bsc:0.05"));
  const std::size_t n = s.two.checkpoint.n;
  const auto phi = static_cast<std::uint64_t>(cfg.get_int("phi", static_cast<long long>(8 * n)));

  const auto history = vq_codec(s, static_cast<std::size_t>(cfg.get_int("vq_block", 4)),
                                static_cast<int>(cfg.get_int("history_bits", 4)), seeds.codebook);
  const auto traj = process::simulate_forward(s.params, seeds);
  const auto frame = codec::stationarize(traj, s.two, history, seeds, Exec::Parallel);
  const auto s1 = as_bits(frame.stream1);
  const CounterRng noise = seeds.channel_rng();

  std::vector<std::uint8_t> s1_hat;
  std::size_t late = 0;
  double uses1 = 0.0;
  if (anytime) {
    const auto [a, b] = channel::parse_rate(cfg.get_str("tree_rate", "1/6"));
    const auto code = channel::TreeCode::make(dmc, a, b, seeds.codebook_rng().fork("tree").key());
    const std::uint64_t horizon = code.first_use(s1.size());
    const auto inputs = channel::tree_encode(code, s1, horizon);
    const auto outputs = channel::dmc_transmit(dmc, inputs, noise.fork("stream1"));
    const auto wd = channel::windowed_decode(code, dmc, outputs, static_cast<std::size_t>(cfg.get_int("window", 14)),
                                             static_cast<std::size_t>(cfg.get_int("commit", 4)), Exec::Parallel);
    s1_hat = wd.bits;
    for (std::size_t i = 0; i < s1.size(); ++i)
      if (wd.commit_time[i] > code.first_use(i + 1) + phi) ++late;
    uses1 = static_cast<double>(horizon);
    rec.set("tree_rate", code.rate());
  } else {
    const auto bpb = static_cast<std::size_t>(cfg.get_int("naive_bits", 3));
    const auto len = static_cast<std::size_t>(cfg.get_int("naive_len", 18));
    const auto t = channel::classical_block_transport(dmc, s1, bpb, len, static_cast<std::uint64_t>(cfg.get_int("naive_seed", 3)),
                                                      noise.fork("stream1"));
    s1_hat = t.decoded;
    uses1 = static_cast<double>(t.blocks * len);
  }
  s1_hat.resize(s1.size());
  std::size_t s1_errors = 0, first_error = s1.size();
  for (std::size_t i = 0; i < s1.size(); ++i)
    if (s1_hat[i] != s1[i]) {
      ++s1_errors;
      first_error = std::min(first_error, i);
    }

  const auto s2 = as_bits(frame.stream2);
  const auto h_len = static_cast<std::size_t>(cfg.get_int("history_len", 16));
  const auto t2 = channel::classical_block_transport(dmc, s2, static_cast<std::size_t>(cfg.get_int("history_code_bits", 4)),
                                                     h_len, static_cast<std::uint64_t>(cfg.get_int("history_seed", 5)),
                                                     noise.fork("stream2"));
  auto s2_hat = t2.decoded;
  s2_hat.resize(s2.size());

  const auto r = codec::reconstruct(frame, BitBuffer(s1_hat), BitBuffer(s2_hat), history, seeds);
  const auto dist = squares(r.error);
  const auto mk_block = static_cast<std::size_t>(cfg.get_int("mk_block", 256));
  const auto avg = block_means(dist, mk_block);
  const auto mk = stats::mann_kendall(avg);
  const double symbols = static_cast<double>(s.params.horizon - 1);

  rec.series.columns = {"block", "start_symbol", "mean_distortion"};
  for (std::size_t b = 0; b < avg.size(); ++b)
    rec.series.rows.push_back({static_cast<double>(b), static_cast<double>(b * mk_block), avg[b]});
  rec.set("anytime", anytime ? 1.0 : 0.0);
  rec.set("symbols_covered", static_cast<double>(r.error.size()));
  rec.set("mean_distortion", mean_of_squares(r.error, 0));
  rec.set("mk_z", mk.z);
  rec.set("mk_p_increasing", mk.p_increasing);
  rec.set("mk_p_two_sided", mk.p_two_sided);
  rec.set("stream1_bits", static_cast<double>(s1.size()));
  rec.set("stream1_bit_errors", static_cast<double>(s1_errors));
  rec.set("stream1_first_error_bit", s1_errors ? static_cast<double>(first_error) : -1.0);
  rec.set("stream1_late_bits", static_cast<double>(late));
  rec.set("stream2_bit_error_rate", t2.bit_error_rate);
  rec.set("rate1", frame.rate1());
  rec.set("rate2", frame.rate2());
  rec.set("channel_uses_per_symbol", (uses1 + static_cast<double>(t2.blocks * h_len)) / symbols);
  rec.set("phi", static_cast<double>(phi));
  rec.wall_seconds = timer.seconds();
  return rec;
}

ResultRecord run_phase_transition(const ExperimentConfig& cfg) {
  const Timer timer;
  ResultRecord rec = start_record(cfg);
  const auto s = bounded_setup(cfg, 2.0, 1.0 / 16.0, 32, 10000);
  const auto seeds = cfg.seeds();
  const auto block_len = static_cast<std::size_t>(cfg.get_int("vq_block", 4));
  const auto mk_block = static_cast<std::size_t>(cfg.get_int("mk_block", 256));
  const auto sweep = cfg.get_list("sweep", {8, 4, 2, 1, 0});
  const auto traj = process::simulate_forward(s.params, seeds);

  rec.series.columns = {"history_bits", "rate2", "mean_distortion", "max_block_distortion", "mk_p_increasing"};
  double worst = 0.0;
  for (double bits : sweep) {
    const auto history = vq_codec(s, block_len, static_cast<int>(bits), seeds.codebook);
    const auto frame = codec::stationarize(traj, s.two, history, seeds, Exec::Parallel);
    const auto r = codec::reconstruct(frame, frame.stream1, frame.stream2, history, seeds);
    const auto avg = block_means(squares(r.error), mk_block);
    const double peak = avg.empty() ? 0.0 : *std::max_element(avg.begin(), avg.end());
    worst = std::max(worst, peak);
    rec.series.rows.push_back(
        {bits, frame.rate2(), mean_of_squares(r.error, 0), peak, stats::mann_kendall(avg).p_increasing});
  }
  // Losing every priority bit: the decoder can only guess zero.
  std::vector<double> err(s.params.horizon);
  double x = traj.x0;
  for (std::size_t t = 0; t < err.size(); ++t) {
    err[t] = x;
    if (t < traj.noise.size()) x = s.params.lambda * x + traj.noise[t];
  }
  const auto lost = block_means(squares(err), mk_block);
  const auto mk = stats::mann_kendall(lost);
  rec.set("max_block_distortion_with_stream1", worst);
  rec.set("no_stream1_mk_p_increasing", mk.p_increasing);
  rec.set("no_stream1_final_distortion", lost.empty() ? 0.0 : lost.back());
  rec.wall_seconds = timer.seconds();
  return rec;
}

PrefixErrorTable embedding_prefix_errors(const embedding::EmbedConfig& cfg, double d, std::size_t trials, int max_delay,
                                         const std::string& noise, const RandomSeeds& seeds) {
  cfg.validate();
  require(d > 0.0 && max_delay >= 1 && trials >= 1, ErrorKind::InvalidConfig, "need d > 0, max delay >= 1, trials >= 1");
  require(noise == "gaussian" || noise == "pareto", ErrorKind::InvalidConfig, "noise must be gaussian or pareto");
  const double K = embedding::gap_constant(cfg);
  const auto blocks = static_cast<std::size_t>(max_delay) + 1;
  constexpr double kTail = 2.5;
  const double pareto_scale = std::sqrt(d * (kTail - 2.0) / kTail);

  std::vector<std::vector<std::uint8_t>> wrong(trials, std::vector<std::uint8_t>(blocks, 0));
  for_each_index(trials, Exec::Parallel, [&](std::size_t trial) {
    const RandomSeeds ts = seeds.for_trial(trial);
    CounterRng rng = ts.channel_rng().fork("embedding_trial");
    std::vector<std::uint32_t> m(blocks);
    for (auto& v : m) v = static_cast<std::uint32_t>(rng() % cfg.messages());
    const auto e = embedding::embed_endpoint_bits(m, cfg, ts);
    const double err = noise == "gaussian"
                           ? std::sqrt(d) * rng.normal()
                           : (rng.uniform() < 0.5 ? -1.0 : 1.0) * pareto_scale * std::pow(1.0 - rng.uniform(), -1.0 / kTail);
    const double xhat = e.endpoint.back() + err;
    const auto est = embedding::decode_prefix(xhat - e.common_part.back(), blocks, cfg);
    for (int psi = 1; psi <= max_delay; ++psi) {
      const std::size_t len = blocks - static_cast<std::size_t>(psi);
      wrong[trial][static_cast<std::size_t>(psi)] = std::equal(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(len), est.begin()) ? 0 : 1;
    }
  });

  PrefixErrorTable t;
  t.trials = trials;
  for (int psi = 1; psi <= max_delay; ++psi) {
    std::uint64_t count = 0;
    for (const auto& w : wrong) count += w[static_cast<std::size_t>(psi)];
    t.delay.push_back(psi);
    t.errors.push_back(count);
    t.rate.push_back(static_cast<double>(count) / static_cast<double>(trials));
    t.bound.push_back(d * std::pow(K / 2.0, -2.0) * std::pow(cfg.lambda, -2.0 * static_cast<double>(cfg.n) * psi));
  }
  return t;
}

ResultRecord run_embed(const ExperimentConfig& cfg) {
  const Timer timer;
  ResultRecord rec = start_record(cfg);
  const auto seeds = cfg.seeds();
  embedding::EmbedConfig ec;
  ec.lambda = cfg.get("lambda", 2.0);
  ec.n = static_cast<std::size_t>(cfg.get_int("n", 2));
  ec.bits_per_block = static_cast<int>(cfg.get_int("bits_per_block", 1));
  ec.delta = cfg.get("delta", 1.0);
  const double d = cfg.get("d", 0.1);
  const auto trials = static_cast<std::size_t>(cfg.get_int("trials", 10000));
  const int max_delay = static_cast<int>(cfg.get_int("max_delay", 3));
  const auto table = embedding_prefix_errors(ec, d, trials, max_delay, cfg.get_str("noise", "gaussian"), seeds);

  rec.series.columns = {"delay", "prefix_error_rate", "bound"};
  bool within = true;
  for (std::size_t i = 0; i < table.delay.size(); ++i) {
    rec.series.rows.push_back({static_cast<double>(table.delay[i]), table.rate[i], table.bound[i]});
    within = within && table.rate[i] <= 1.5 * table.bound[i];
  }
  rec.set("gap_constant", embedding::gap_constant(ec));
  rec.set("beta", ec.beta());
  rec.set("within_bound", within ? 1.0 : 0.0);
  const std::vector<std::uint64_t> totals(table.delay.size(), table.trials);
  const auto fit = stats::fit_exponential_tail(table.errors, totals);
  rec.set("fitted_exponent_per_block", fit.alpha);
  rec.set("reference_exponent_per_block", 2.0 * static_cast<double>(ec.n) * std::log2(ec.lambda));

  // History embedding: bit error rate against imposed reconstruction noise.
  const auto book = embedding::HistoryEmbedCodebook::make(static_cast<std::size_t>(cfg.get_int("history_block", 4)),
                                                          static_cast<int>(cfg.get_int("history_bits", 4)), ec.lambda,
                                                          ec.delta, seeds.codebook);
  rec.set("history_min_distance", book.min_distance);
  const auto sweep = cfg.get_list("noise_sweep", {0.0, 0.05, 0.1, 0.2, 0.4});
  const std::size_t hk = std::max<std::size_t>(trials / 10, 1);
  CounterRng hr = seeds.channel_rng().fork("history_embed");
  std::vector<std::uint32_t> msgs(hk);
  std::vector<double> side(hk);
  for (std::size_t k = 0; k < hk; ++k) {
    msgs[k] = static_cast<std::uint32_t>(hr() % (1u << book.bits));
    side[k] = hr.uniform(-1.0, 1.0);
  }
  const auto clean = embedding::embed_history_bits(msgs, side, book);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    auto noisy = clean;
    CounterRng nr = hr.fork(i);
    for (auto& v : noisy) v += sweep[i] * nr.normal();
    const auto got = embedding::extract_history_bits(noisy, side, book);
    std::size_t bad = 0;
    for (std::size_t k = 0; k < hk; ++k) bad += static_cast<std::size_t>(std::popcount(got[k] ^ msgs[k]));
    std::ostringstream key;
    key << "history_ber_sigma_" << sweep[i];
    rec.set(key.str(), static_cast<double>(bad) / static_cast<double>(hk * book.bits));
  }

  const double gamma = cfg.get("gamma", 0.0);
  if (gamma > 0.0) {
    const auto q = embedding::erasure_schedule(trials, cfg.get("arrival_rate", 0.5), gamma, cfg.get("r", 0.5), seeds);
    rec.set("queue_alpha", q.fit.alpha);
    rec.set("queue_exponent_bound", q.exponent_bound);
    rec.set("queue_unstable", q.unstable ? 1.0 : 0.0);
  }
  rec.wall_seconds = timer.seconds();
  return rec;
}

ResultRecord run_queue(const ExperimentConfig& cfg) {
  const Timer timer;
  ResultRecord rec = start_record(cfg);
  const double gamma = cfg.get("gamma", 1.0 / 32.0), r = cfg.get("r", 0.5);
  const double arrival = cfg.get("arrival_rate", 1.0 / (1.0 + 2.0 * r));
  const auto packets = static_cast<std::size_t>(cfg.get_int("packets", 100000));
  const auto q = embedding::erasure_schedule(packets, arrival, gamma, r, cfg.seeds());
  const std::int64_t max_delay = q.delay.empty() ? 0 : *std::max_element(q.delay.begin(), q.delay.end());
  rec.series.columns = {"delay", "survival"};
  const auto span = std::min<std::int64_t>(max_delay, 4096);
  std::vector<std::uint64_t> above(static_cast<std::size_t>(span) + 2, 0);
  for (auto v : q.delay) ++above[static_cast<std::size_t>(std::min(v, span + 1))];
  // Turn the histogram into counts of delay > s.
  std::uint64_t acc = 0;
  for (std::size_t s = above.size(); s-- > 0;) {
    const std::uint64_t here = above[s];
    above[s] = acc;
    acc += here;
  }
  for (std::int64_t s = 0; s <= span; ++s)
    rec.series.rows.push_back(
        {static_cast<double>(s), static_cast<double>(above[static_cast<std::size_t>(s)]) / static_cast<double>(q.delay.size())});
  rec.set("alpha", q.fit.alpha);
  rec.set("exponent_bound", q.exponent_bound);
  rec.set("bound_applies", q.bound_applies ? 1.0 : 0.0);
  rec.set("unstable", q.unstable ? 1.0 : 0.0);
  rec.set("packets_served", static_cast<double>(q.delay.size()));
  rec.set("max_delay", static_cast<double>(max_delay));
  rec.wall_seconds = timer.seconds();
  return rec;
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::NoiselessRd:
      return run_rd_experiment(cfg);
    case Scenario::E2eAnytime:
    case Scenario::E2eNaive:
      return run_e2e(cfg);
    case Scenario::PhaseTransition:
      return run_phase_transition(cfg);
    case Scenario::EmbedReduction:
      return run_embed(cfg);
    case Scenario::Queue:
      return run_queue(cfg);
  }
  fail(ErrorKind::InvalidConfig, "unknown scenario");
}

}  // namespace malab::harness
