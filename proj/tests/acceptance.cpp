// Acceptance run: one PASS/FAIL line per check, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "malab/channel.hpp"
#include "malab/checkpoint.hpp"
#include "malab/embedding.hpp"
#include "malab/gaussian_path.hpp"
#include "malab/harness.hpp"
#include "malab/process.hpp"
#include "malab/rdmath.hpp"
#include "malab/stats.hpp"
#include "malab/tree_code.hpp"
#include "malab/unary.hpp"

using namespace malab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome checkpoint_exactness() {
  process::ProcessParams p;
  p.lambda = 2.0;
  p.noise = process::BoundedUniform{1.0};
  p.omega0 = 1.0 / 16.0;
  p.horizon = 32 * 1000 + 1;
  const auto traj = process::simulate_forward(p, RandomSeeds::from_master(1));
  codec::CheckpointConfig cfg;
  cfg.n = 32;
  cfg.delta = 1.0 / 16.0;
  cfg.r1_bits_per_block = static_cast<int>(std::ceil(32.0 * codec::required_checkpoint_rate(2.0, 1.0, p.omega0, cfg.delta, 32) - 1e-9));
  const auto tr = codec::encode_checkpoints(traj, cfg, RandomSeeds::from_master(1));
  double worst = 0.0;
  std::size_t violations = 0;
  for (double e : tr.errors) {
    worst = std::max(worst, std::abs(e));
    violations += std::abs(e) > cfg.delta / 2.0;
  }
  // The same check on absolute values, where they are still representable.
  const auto abs = codec::absolute_checkpoints(tr.layout, tr.init_value, tr.blocks);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < abs.size(); ++k) {
    const double x = traj.values[k * 32];
    if (std::abs(x) > 1e12) break;
    ++checked;
    violations += std::abs(abs[k].second - x) > cfg.delta / 2.0 + 1e-12;
  }
  return {violations == 0 && tr.block_count() == 1000,
          fmt("blocks=%zu r1=%d max|e|=%.6f bound=%.6f violations=%zu (absolute check on first %zu)", tr.block_count(),
              cfg.r1_bits_per_block, worst, cfg.delta / 2.0, violations, checked)};
}

Outcome rate_shift() {
  const auto grid = rdmath::log_grid(1e-3, 10.0, 20);
  double worst = 0.0;
  for (double lambda : {1.5, 2.0, 4.0}) {
    const auto f = rdmath::rd_curve_forward(lambda, 1.0, grid);
    const auto b = rdmath::rd_curve_backward(lambda, 1.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      worst = std::max(worst, std::abs(f.points[i].rate - b.points[i].rate - std::log2(lambda)));
  }
  const double d1 = rdmath::distortion_at_rate(2.0, 1.0, 1.0);
  const double anchor = std::abs(d1 - 1.0 / std::sqrt(25.0 - 16.0));
  return {worst < 1e-9 && anchor <= 1e-9, fmt("max|Rf-Rb-log2(lambda)|=%.3e over 60 points, D(R=1)=%.12f", worst, d1)};
}

Outcome sequential_gap() {
  bool ok = true;
  double min_gap = 1e300;
  for (int i = 0; i < 10; ++i) {
    const double d = std::pow(10.0, -3.0 + 0.3 * i);
    const double gap = rdmath::rd_sequential(2.0, d) - rdmath::rate_at_distortion(2.0, 1.0, d);
    min_gap = std::min(min_gap, gap);
    ok = ok && gap > 0.0;
  }
  const double r = 1.0 + 0.01;
  const double dseq = rdmath::distortion_sequential(2.0, r);
  const double dwf = rdmath::distortion_at_rate(2.0, 1.0, r);
  ok = ok && dseq > 10.0 * dwf;
  return {ok, fmt("min Rseq-R over 10 d = %.4f; at R=log2(2)+0.01 Dseq=%.3f vs D=%.4f (ratio %.1f)", min_gap, dseq, dwf, dseq / dwf)};
}

Outcome anytime_exponent() {
  const auto dmc = rdmath::DmcSpec::bsc(0.1);
  const auto code = channel::TreeCode::make(dmc, 1, 2, 2024);
  const auto tab = channel::measure_anytime_reliability(code, dmc, 30, 10000, RandomSeeds::from_master(1));
  const double er = rdmath::random_coding_exponent(dmc, 0.5).exponent;
  bool monotone = true;
  std::string curve;
  for (std::size_t phi = 4; phi <= 24 && phi < tab.probability.size(); ++phi) {
    if (phi > 4 && tab.probability[phi] > tab.probability[phi - 1]) monotone = false;
    if (phi % 4 == 0) curve += fmt(" p(%zu)=%.2e", phi, tab.probability[phi]);
  }
  const bool ok = tab.fit.alpha >= 0.5 * er && monotone;
  return {ok, fmt("alpha=%.4f floor=0.5*Er(1/2)=%.4f monotone=%s fit_delays=%zu..%zu%s", tab.fit.alpha, 0.5 * er,
                  monotone ? "yes" : "no", tab.fit.delays_used.empty() ? 0 : static_cast<std::size_t>(tab.fit.delays_used.front()),
                  tab.fit.delays_used.empty() ? 0 : static_cast<std::size_t>(tab.fit.delays_used.back()), curve.c_str())};
}

Outcome gap_property() {
  embedding::EmbedConfig cfg;  // lambda 2, n 2, nR 1, delta 1
  const double K = embedding::gap_constant(cfg);
  const double ln = cfg.lambda_n();
  std::size_t pairs = 0, violations = 0, extraction_failures = 0;
  double worst = 1e300;
  for (std::size_t k = 1; k <= 6; ++k) {
    const std::uint64_t total = 1ULL << k;
    std::vector<double> x(total);
    std::vector<std::vector<std::uint32_t>> msgs(total);
    for (std::uint64_t a = 0; a < total; ++a) {
      msgs[a].resize(k);
      for (std::size_t i = 0; i < k; ++i) msgs[a][i] = static_cast<std::uint32_t>((a >> i) & 1);
      x[a] = embedding::message_endpoints(msgs[a], cfg).back();
    }
    for (std::uint64_t a = 0; a < total; ++a) {
      for (std::uint64_t b = a + 1; b < total; ++b) {
        std::size_t j = 0;
        while (msgs[a][j] == msgs[b][j]) ++j;
        const double ratio = std::abs(x[a] - x[b]) / (K * std::pow(ln, static_cast<double>(k - 1 - j)));
        worst = std::min(worst, ratio);
        violations += ratio < 1.0;
        ++pairs;
      }
      // Errors just below half the gap, at every prefix length and both signs.
      for (std::size_t i = 1; i <= k; ++i)
        for (double sign : {-1.0, 1.0}) {
          const double err = sign * 0.99 * (K / 2.0) * std::pow(ln, static_cast<double>(k - i));
          const auto got = embedding::decode_prefix(x[a] + err, k, cfg);
          extraction_failures += !std::equal(msgs[a].begin(), msgs[a].begin() + static_cast<long>(i), got.begin());
        }
    }
  }
  return {violations == 0 && extraction_failures == 0 && std::abs(K - 1.0 / 3.0) < 1e-15,
          fmt("K=%.6f pairs=%zu violations=%zu min ratio=%.4f extraction failures=%zu", K, pairs, violations, worst,
              extraction_failures)};
}

Outcome embedding_reliability() {
  embedding::EmbedConfig cfg;
  const auto t = harness::embedding_prefix_errors(cfg, 0.1, 10000, 3, "gaussian", RandomSeeds::from_master(1));
  bool ok = true;
  std::string s;
  for (std::size_t i = 0; i < t.delay.size(); ++i) {
    ok = ok && t.rate[i] <= 1.5 * t.bound[i];
    s += fmt(" psi=%d rate=%.2e limit=%.2e;", t.delay[i], t.rate[i], 1.5 * t.bound[i]);
  }
  return {ok, "d=0.1, 1e4 trials:" + s};
}

Outcome queue_bound() {
  const auto q = embedding::erasure_schedule(100000, 0.5, 1.0 / 32.0, 0.5, RandomSeeds::from_master(1));
  const double floor = 0.8 * (5.0 - 2.0 * std::sqrt(1.0 / 32.0));
  return {q.fit.alpha >= floor && !q.unstable,
          fmt("alpha=%.4f floor=%.4f bound=%.4f unstable=%d", q.fit.alpha, floor, q.exponent_bound, q.unstable ? 1 : 0)};
}

Outcome end_to_end() {
  harness::ExperimentConfig a;
  a.scenario = harness::Scenario::E2eAnytime;
  a.seed = 1;
  harness::ExperimentConfig b = a;
  b.scenario = harness::Scenario::E2eNaive;
  const auto ra = harness::run_e2e(a);
  const auto rb = harness::run_e2e(b);
  const double pa = ra.metric("mk_p_increasing");
  const double pb = rb.metric("mk_p_increasing");
  return {pa > 0.05 && pb < 0.01,
          fmt("anytime: p=%.3g D=%.4f stream1 errors=%g; one-shot: p=%.3g D=%.3g stream1 errors=%g", pa,
              ra.metric("mean_distortion"), ra.metric("stream1_bit_errors"), pb, rb.metric("mean_distortion"),
              rb.metric("stream1_bit_errors"))};
}

Outcome unary_code() {
  const std::pair<int, const char*> table[] = {{0, "100"},     {1, "1110"},    {-1, "1100"},    {2, "11110"},   {-2, "11010"},
                                               {3, "111110"},  {-3, "110110"}, {4, "1111110"},  {-4, "1101110"}};
  std::size_t mismatches = 0;
  for (const auto& [s, word] : table) {
    const auto b = codec::unary_encode_offset(s);
    std::string got;
    for (std::size_t i = 0; i < b.size(); ++i) got += b[i] ? '1' : '0';
    mismatches += got != word;
  }
  std::vector<std::string> words;
  for (int s = -64; s <= 64; ++s) {
    const auto b = codec::unary_encode_offset(s);
    std::string w;
    for (std::size_t i = 0; i < b.size(); ++i) w += b[i] ? '1' : '0';
    words.push_back(w);
  }
  std::size_t prefix_clashes = 0;
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = 0; j < words.size(); ++j)
      if (i != j && words[j].rfind(words[i], 0) == 0) ++prefix_clashes;

  process::ProcessParams p;
  p.lambda = 2.0;
  p.noise = process::Gaussian{1.0};
  p.omega0 = 1.0 / 16.0;
  codec::GaussianCheckpointConfig cfg;
  const std::size_t K = 100000;
  p.horizon = cfg.n * K + 1;
  const auto seeds = RandomSeeds::from_master(1);
  const auto tr = codec::encode_checkpoints_gaussian(process::simulate_forward(p, seeds), cfg, seeds);
  const double l2 = cfg.l_scale() * cfg.l_scale();
  bool envelope = true;
  std::string s;
  for (std::int64_t j = 1; j <= 3; ++j) {
    std::size_t count = 0;
    for (auto o : tr.offsets) count += std::abs(o) >= j;
    const double freq = static_cast<double>(count) / static_cast<double>(K);
    const double bound = std::exp(-0.5 * static_cast<double>(j * j) * l2);
    envelope = envelope && freq <= bound;
    s += fmt(" P(|s|>=%lld)=%.2e<=%.2e", static_cast<long long>(j), freq, bound);
  }
  return {mismatches == 0 && prefix_clashes == 0 && envelope,
          fmt("table mismatches=%zu prefix clashes=%zu over |s|<=64; 1e5 blocks:", mismatches, prefix_clashes) + s};
}

Outcome bound_respect() {
  harness::ExperimentConfig c;
  c.scenario = harness::Scenario::NoiselessRd;
  c.parameters["sweep"] = "0,2,4,6,8";
  const auto r = harness::run_rd_experiment(c);
  std::size_t r2 = 0, gap = 0;
  for (std::size_t i = 0; i < r.series.columns.size(); ++i) {
    if (r.series.columns[i] == "rate2") r2 = i;
    if (r.series.columns[i] == "gap_history") gap = i;
  }
  std::string s;
  double worst_gap = 0.0;
  for (const auto& row : r.series.rows) {
    s += fmt(" R2=%.2f:gap=%.2f", row[r2], row[gap]);
    if (row[r2] >= 1.0 - 1e-9 && row[r2] <= 2.0 + 1e-9) worst_gap = std::max(worst_gap, row[gap]);
  }
  const double margin = r.metric("min_bound_margin");
  return {r.series.rows.size() == 5 && margin >= -1e-6,
          fmt("min rate margin=%.4f over %zu points; VQ gap at R2 in [1,2] = %.2f (target 2.5);", margin, r.series.rows.size(),
              worst_gap) + s};
}

Outcome entropy_bound() {
  struct Setting {
    double K, eta, delta;
    const char* name;
    std::function<double(std::mt19937_64&)> draw;
  };
  const Setting settings[] = {
      {4.0, 2.0, 1.0 / 16.0, "gaussian sd 2", [](std::mt19937_64& g) { return std::normal_distribution<double>(0.0, 2.0)(g); }},
      {2.0, 2.0, 1.0 / 64.0, "uniform var 2",
       [](std::mt19937_64& g) { return std::uniform_real_distribution<double>(-std::sqrt(6.0), std::sqrt(6.0))(g); }},
      {8.0, 1.0, 1.0 / 8.0, "laplace E|Z|=8",
       [](std::mt19937_64& g) {
         const double e = std::exponential_distribution<double>(1.0 / 8.0)(g);
         return std::bernoulli_distribution(0.5)(g) ? e : -e;
       }},
  };
  bool ok = true;
  std::string s;
  std::mt19937_64 gen(11);
  for (const auto& st : settings) {
    std::vector<std::int64_t> labels(1000000);
    for (auto& l : labels) l = static_cast<std::int64_t>(std::floor(st.draw(gen) / st.delta));
    const double h = stats::plugin_entropy_bits(labels);
    const double b = rdmath::entropy_bound(st.K, st.eta, st.delta);
    ok = ok && h <= b;
    s += fmt(" %s: H=%.3f<=%.3f;", st.name, h, b);
  }
  return {ok, "1e6 samples:" + s};
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> checks[] = {
      {"checkpoint exactness", checkpoint_exactness},
      {"rate shift", rate_shift},
      {"sequential gap", sequential_gap},
      {"anytime exponent", anytime_exponent},
      {"gap property", gap_property},
      {"embedding reliability", embedding_reliability},
      {"queue bound", queue_bound},
      {"end-to-end dichotomy", end_to_end},
      {"unary code", unary_code},
      {"bound respect", bound_respect},
      {"entropy bound", entropy_bound},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : checks) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2d %-22s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of 11 checks passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
