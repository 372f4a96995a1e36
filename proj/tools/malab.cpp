// malab: command-line front end for the experiments.
//
// Exit codes: 0 success, 2 invalid configuration, 3 numeric failure, 1 I/O.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "malab/error.hpp"
#include "malab/harness.hpp"
#include "malab/rdmath.hpp"
#include "malab/tree_code.hpp"
#include "malab/two_stream.hpp"

using namespace malab;
using harness::ExperimentConfig;
using harness::ResultRecord;

namespace {

struct Global {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void emit(const ResultRecord& r, const Global& g) { harness::emit_results(r, harness::parse_format(g.format), g.out); }

ResultRecord rd_curve(const Global& g, double lambda, double sigma, double kmin, double kmax, std::size_t points,
                      const std::string& variant) {
  require(variant == "forward" || variant == "backward" || variant == "sequential", ErrorKind::InvalidConfig,
          "variant must be forward, backward or sequential");
  require(kmin > 0.0 && kmax > kmin && points >= 2, ErrorKind::InvalidConfig, "need 0 < kappa-min < kappa-max and points >= 2");
  ResultRecord r;
  r.scenario = "rd-curve";
  r.seed = g.seed;
  r.parameters = {{"lambda", num(lambda)}, {"sigma", num(sigma)}, {"kappa_min", num(kmin)}, {"kappa_max", num(kmax)},
                  {"points", std::to_string(points)}, {"variant", variant}};
  const auto grid = rdmath::log_grid(kmin, kmax, points);
  rdmath::RdCurve curve;
  if (variant == "forward") curve = rdmath::rd_curve_forward(lambda, sigma, grid);
  if (variant == "backward") curve = rdmath::rd_curve_backward(lambda, sigma, grid);
  if (variant == "sequential") {
    // Causal rate at the distortions of the forward curve.
    std::vector<double> d;
    for (const auto& p : rdmath::rd_curve_forward(lambda, sigma, grid).points) d.push_back(p.distortion);
    curve = rdmath::rd_curve_sequential(lambda, sigma, d);
  }
  r.series.columns = {"rate", "distortion"};
  for (const auto& p : curve.points) r.series.rows.push_back({p.rate, p.distortion});
  r.set("log2_lambda", std::log2(lambda));
  return r;
}

struct EncodeOptions {
  double lambda = 2.0;
  std::string noise = "uniform:1";
  std::size_t n = 32;
  double delta = 1.0 / 16.0;
  int r1 = 0;
  std::string history = "vq";
  double rate2 = 1.0;
  std::size_t horizon = 3201;
  std::size_t phi = 0;
  std::string input;
  std::string stream1 = "stream1.bits";
  std::string stream2 = "stream2.bits";
};

codec::HistoryCodecSpec history_spec(const EncodeOptions& o, std::uint64_t seed) {
  codec::HistoryCodecSpec spec;
  if (o.history == "scalar") {
    require(o.rate2 == std::floor(o.rate2), ErrorKind::InvalidConfig, "scalar history rate must be whole bits per symbol");
    spec.variant = codec::ScalarUniform{static_cast<int>(o.rate2)};
  } else if (o.history == "vq") {
    const double bits = o.rate2 * 4.0;
    require(bits == std::floor(bits), ErrorKind::InvalidConfig, "vq history rate must be a multiple of 1/4");
    spec.variant = codec::RandomCodebookVQ{4, static_cast<int>(bits), seed};
  } else {
    fail(ErrorKind::InvalidConfig, "history must be scalar or vq");
  }
  return spec;
}

ResultRecord encode(const Global& g, const EncodeOptions& o) {
  const RandomSeeds seeds = RandomSeeds::from_master(g.seed);
  process::ProcessParams params;
  params.lambda = o.lambda;
  params.noise = process::parse_noise(o.noise);
  params.horizon = o.horizon;
  process::Trajectory traj;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + o.input);
    const auto file = process::read_trajectory_csv(in);
    require(file.values.size() >= 2, ErrorKind::InvalidConfig, "trajectory file needs at least two samples");
    params.lambda = file.lambda;
    params.noise = process::parse_noise(file.noise);
    params.horizon = file.values.size();
    std::vector<double> w;
    for (std::size_t t = 0; t + 1 < file.values.size(); ++t) w.push_back(file.values[t + 1] - params.lambda * file.values[t]);
    traj = process::simulate_forward(params, file.values.front(), w);
  }
  const bool bounded = std::holds_alternative<process::BoundedUniform>(params.noise);
  const bool gaussian = std::holds_alternative<process::Gaussian>(params.noise);
  require(bounded || gaussian, ErrorKind::InvalidConfig, "encode supports uniform and gaussian noise");
  if (bounded) params.omega0 = std::get<process::BoundedUniform>(params.noise).omega;
  params.validate();
  if (o.input.empty()) traj = process::simulate_forward(params, seeds);

  ResultRecord r;
  r.scenario = "encode";
  r.seed = g.seed;
  r.parameters = {{"lambda", num(params.lambda)}, {"noise", process::describe(params.noise)}, {"n", std::to_string(o.n)},
                  {"delta", num(o.delta)}, {"history", o.history}, {"rate2", num(o.rate2)},
                  {"horizon", std::to_string(params.horizon)}};
  const auto model = codec::HistoryModel::make(params.lambda, o.n, o.delta, params.noise);
  const codec::HistoryCodec history(history_spec(o, seeds.codebook), model);
  r.series.columns = {"block", "delay_symbols"};

  if (bounded) {
    codec::TwoStreamConfig cfg;
    cfg.checkpoint.n = o.n;
    cfg.checkpoint.delta = o.delta;
    const double req = codec::required_checkpoint_rate(params.lambda, std::get<process::BoundedUniform>(params.noise).omega,
                                                       params.omega0, o.delta, o.n);
    cfg.checkpoint.r1_bits_per_block = o.r1 > 0 ? o.r1 : static_cast<int>(std::ceil(static_cast<double>(o.n) * req - 1e-9));
    r.parameters["r1"] = std::to_string(cfg.checkpoint.r1_bits_per_block);
    const auto frame = codec::stationarize(traj, cfg, history, seeds, Exec::Parallel);
    const auto rec = codec::reconstruct(frame, frame.stream1, frame.stream2, history, seeds);
    double d = 0.0;
    for (std::size_t t = frame.offset; t < rec.error.size(); ++t) d += rec.error[t] * rec.error[t];
    d /= static_cast<double>(rec.error.size() - frame.offset);
    write_bitstream_file(o.stream1, frame.stream1);
    write_bitstream_file(o.stream2, frame.stream2);
    r.set("rate1", frame.rate1());
    r.set("rate2", frame.rate2());
    r.set("distortion", d);
    r.set("offset", static_cast<double>(frame.offset));
    // Fixed-rate records leave as soon as their block ends.
    for (std::size_t k = 0; k < frame.main_trace.block_count(); ++k) r.series.rows.push_back({static_cast<double>(k), 0.0});
    return r;
  }

  codec::GaussianCheckpointConfig gcfg;
  gcfg.n = o.n;
  gcfg.delta = o.delta;
  gcfg.validate();
  const auto trace = codec::encode_checkpoints_gaussian(traj, gcfg, seeds);
  const double drain = trace.layout.drain_rate(gcfg);
  const auto fifo = codec::fifo_smooth(trace.records, trace.arrival, drain, gcfg.fifo_cap_bits);
  std::vector<double> zq;
  for (const auto& b : trace.checkpoints.blocks) zq.push_back(b.zq);
  BitBuffer s2;
  history.encode(trace.checkpoints.history, zq, s2, Exec::Parallel);
  const auto decoded = history.decode(s2, zq, zq.size());
  const std::size_t phi = o.phi > 0 ? o.phi : 8 * o.n;
  const auto err = codec::reconstruct_gaussian_errors(traj, trace, fifo, drain, history, decoded, phi);
  double d = 0.0;
  for (double e : err) d += e * e;
  d /= static_cast<double>(std::max<std::size_t>(err.size(), 1));
  write_bitstream_file(o.stream1, fifo.stream);
  write_bitstream_file(o.stream2, s2);
  const double symbols = static_cast<double>(std::max<std::size_t>(err.size(), 1));
  r.set("rate1", drain);
  r.set("rate2", static_cast<double>(s2.size()) / symbols);
  r.set("distortion", d);
  r.set("phi", static_cast<double>(phi));
  r.set("fifo_overflow_events", static_cast<double>(fifo.overflow_events));
  r.set("fifo_max_backlog", static_cast<double>(fifo.max_backlog));
  for (std::size_t k = 0; k < fifo.delay_symbols.size(); ++k)
    r.series.rows.push_back({static_cast<double>(k), static_cast<double>(fifo.delay_symbols[k])});
  return r;
}

ResultRecord anytime_bench(const Global& g, const std::string& chan, const std::string& rate, std::uint64_t horizon,
                           std::size_t trials) {
  const auto dmc = channel::parse_channel(chan);
  const auto [a, b] = channel::parse_rate(rate);
  const RandomSeeds seeds = RandomSeeds::from_master(g.seed);
  const auto code = channel::TreeCode::make(dmc, a, b, seeds.codebook_rng().fork("tree").key());
  const auto table = channel::measure_anytime_reliability(code, dmc, horizon, trials, seeds);
  const auto er = rdmath::random_coding_exponent(dmc, code.rate());
  ResultRecord r;
  r.scenario = "anytime-bench";
  r.seed = g.seed;
  r.parameters = {{"channel", chan}, {"rate", rate}, {"horizon", std::to_string(horizon)}, {"trials", std::to_string(trials)}};
  r.series.columns = {"delay", "empirical_error", "fit_alpha", "fit_K"};
  for (std::size_t i = 0; i < table.delay.size(); ++i)
    r.series.rows.push_back({static_cast<double>(table.delay[i]), table.probability[i], table.fit.alpha, table.fit.k});
  r.set("fit_alpha", table.fit.alpha);
  r.set("fit_K", table.fit.k);
  r.set("random_coding_exponent", er.exponent);
  r.set("capacity", rdmath::capacity(dmc));
  return r;
}

void add_params(CLI::App* cmd, std::vector<std::string>& params) {
  cmd->add_option("--param", params, "extra scenario parameter key=value (repeatable)");
}

void apply_params(ExperimentConfig& cfg, const std::vector<std::string>& params) {
  for (const auto& p : params) {
    const auto eq = p.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::InvalidConfig, "--param expects key=value, got '" + p + "'");
    cfg.parameters[p.substr(0, eq)] = p.substr(eq + 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation laboratory for unstable sources over noisy channels"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--out", g.out, "output path (stdout when empty)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  double lambda = 2.0, sigma = 1.0, kmin = 1e-4, kmax = 10.0;
  std::size_t points = 50;
  std::string variant = "forward";
  auto* rd = app.add_subcommand("rd-curve", "water-filling, backward or causal rate-distortion curve");
  rd->add_option("--lambda", lambda)->capture_default_str();
  rd->add_option("--sigma", sigma)->capture_default_str();
  rd->add_option("--kappa-min", kmin)->capture_default_str();
  rd->add_option("--kappa-max", kmax)->capture_default_str();
  rd->add_option("--points", points)->capture_default_str();
  rd->add_option("--variant", variant)->capture_default_str();

  EncodeOptions eo;
  auto* enc = app.add_subcommand("encode", "two-stream encode of a simulated or supplied trajectory");
  enc->add_option("--lambda", eo.lambda)->capture_default_str();
  enc->add_option("--noise", eo.noise, "uniform:<omega> or gaussian:<sigma>")->capture_default_str();
  enc->add_option("--n", eo.n)->capture_default_str();
  enc->add_option("--delta", eo.delta)->capture_default_str();
  enc->add_option("--r1", eo.r1, "checkpoint bits per block (0: smallest that fits)");
  enc->add_option("--history", eo.history, "scalar or vq")->capture_default_str();
  enc->add_option("--rate2", eo.rate2, "history bits per symbol")->capture_default_str();
  enc->add_option("--horizon", eo.horizon)->capture_default_str();
  enc->add_option("--phi", eo.phi, "decoder delay in symbols for gaussian noise (0: 8n)");
  enc->add_option("--input", eo.input, "trajectory CSV to encode instead of simulating");
  enc->add_option("--stream1", eo.stream1)->capture_default_str();
  enc->add_option("--stream2", eo.stream2)->capture_default_str();

  ExperimentConfig e2e;
  std::string mode = "anytime", e2e_channel = "bsc:0.05";
  std::vector<std::string> e2e_params;
  auto* sim = app.add_subcommand("simulate-e2e", "source code over a noisy channel, anytime or one-shot stream 1");
  sim->add_option("--mode", mode)->check(CLI::IsMember({"anytime", "naive", "rd", "phase-transition"}))->capture_default_str();
  sim->add_option("--channel", e2e_channel)->capture_default_str();
  add_params(sim, e2e_params);

  std::string ab_channel = "bsc:0.1", ab_rate = "1/2";
  std::uint64_t ab_horizon = 30;
  std::size_t ab_trials = 10000;
  auto* ab = app.add_subcommand("anytime-bench", "tree-code error probability against delay");
  ab->add_option("--channel", ab_channel)->capture_default_str();
  ab->add_option("--rate", ab_rate)->capture_default_str();
  ab->add_option("--horizon", ab_horizon)->capture_default_str();
  ab->add_option("--trials", ab_trials)->capture_default_str();

  ExperimentConfig em;
  std::string em_lambda = "2", em_n = "2", em_bits = "1", em_delta = "1", em_gamma = "0", em_sweep = "0,0.05,0.1,0.2,0.4";
  std::vector<std::string> em_params;
  auto* emb = app.add_subcommand("embed", "Cantor-set embedding and extraction");
  emb->add_option("--lambda", em_lambda)->capture_default_str();
  emb->add_option("--n", em_n)->capture_default_str();
  emb->add_option("--bits-per-block", em_bits)->capture_default_str();
  emb->add_option("--delta", em_delta)->capture_default_str();
  emb->add_option("--gamma", em_gamma)->capture_default_str();
  emb->add_option("--noise-sweep", em_sweep)->capture_default_str();
  add_params(emb, em_params);

  std::string q_gamma = "1/32", q_r = "0.5", q_packets = "100000", q_rate;
  auto* qb = app.add_subcommand("queue-bench", "packet-erasure FIFO delay tail");
  qb->add_option("--gamma", q_gamma)->capture_default_str();
  qb->add_option("--r", q_r)->capture_default_str();
  qb->add_option("--packets", q_packets)->capture_default_str();
  qb->add_option("--arrival-rate", q_rate, "packets per slot (default 1/(1+2r))");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ResultRecord r;
    if (*rd) {
      r = rd_curve(g, lambda, sigma, kmin, kmax, points, variant);
    } else if (*enc) {
      r = encode(g, eo);
      // The summary is JSON unless CSV was asked for explicitly.
      if (app.get_option("--format")->count() == 0) g.format = "json";
    } else if (*sim) {
      e2e.seed = g.seed;
      e2e.scenario = mode == "anytime"  ? harness::Scenario::E2eAnytime
                     : mode == "naive" ? harness::Scenario::E2eNaive
                     : mode == "rd"    ? harness::Scenario::NoiselessRd
                                       : harness::Scenario::PhaseTransition;
      if (mode == "anytime" || mode == "naive") e2e.parameters["channel"] = e2e_channel;
      apply_params(e2e, e2e_params);
      r = harness::run_experiment(e2e);
    } else if (*ab) {
      r = anytime_bench(g, ab_channel, ab_rate, ab_horizon, ab_trials);
    } else if (*emb) {
      em.seed = g.seed;
      em.scenario = harness::Scenario::EmbedReduction;
      em.parameters = {{"lambda", em_lambda}, {"n", em_n}, {"bits_per_block", em_bits}, {"delta", em_delta},
                       {"gamma", em_gamma}, {"noise_sweep", em_sweep}};
      apply_params(em, em_params);
      r = harness::run_experiment(em);
    } else if (*qb) {
      ExperimentConfig q;
      q.seed = g.seed;
      q.scenario = harness::Scenario::Queue;
      q.parameters = {{"gamma", q_gamma}, {"r", q_r}, {"packets", q_packets}};
      if (!q_rate.empty()) q.parameters["arrival_rate"] = q_rate;
      r = harness::run_experiment(q);
    }
    emit(r, g);
  } catch (const Error& e) {
    std::cerr << "malab: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::InvalidArgument:
      case ErrorKind::InvalidConfig:
        return 2;
      case ErrorKind::NumericFailure:
      case ErrorKind::DecompositionFailure:
        return 3;
      case ErrorKind::Io:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "malab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
