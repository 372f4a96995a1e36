#pragma once

// End-to-end experiments built from the other modules, and their records.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "malab/embedding.hpp"
#include "malab/rng.hpp"

namespace malab::harness {

enum class Scenario { NoiselessRd, E2eAnytime, E2eNaive, PhaseTransition, EmbedReduction, Queue };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

struct ExperimentConfig {
  Scenario scenario = Scenario::NoiselessRd;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 1;
  std::filesystem::path output;

  RandomSeeds seeds() const { return RandomSeeds::from_master(seed); }

  // Typed lookups; a present but malformed value is an InvalidConfig error.
  double get(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
};

struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  friend bool operator==(const Series&, const Series&) = default;
};

struct ResultRecord {
  std::string scenario;
  std::map<std::string, std::string> parameters;
  std::vector<std::pair<std::string, double>> metrics;  // insertion order is the output order
  Series series;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;

  void set(const std::string& key, double value);
  double metric(const std::string& key) const;  // NaN if absent
  bool has(const std::string& key) const;
};

/// Records compare equal when everything but the wall time matches bit for bit.
bool same_results(const ResultRecord& a, const ResultRecord& b);

// Scenario runners. Parameters not given take the defaults listed in the README.
ResultRecord run_rd_experiment(const ExperimentConfig& cfg);
ResultRecord run_e2e(const ExperimentConfig& cfg);
ResultRecord run_phase_transition(const ExperimentConfig& cfg);
ResultRecord run_embed(const ExperimentConfig& cfg);
ResultRecord run_queue(const ExperimentConfig& cfg);
ResultRecord run_experiment(const ExperimentConfig& cfg);

/// Prefix-error rates of Cantor embedding under synthetic reconstruction noise
/// with E|noise|^2 = d. `noise` is "gaussian" or "pareto" (symmetric, tail index 2.5).
struct PrefixErrorTable {
  std::vector<int> delay;  // block delay psi
  std::vector<std::uint64_t> errors;
  std::uint64_t trials = 0;
  std::vector<double> rate;
  std::vector<double> bound;  // d (K/2)^-2 lambda^{-2 n psi}
};
PrefixErrorTable embedding_prefix_errors(const embedding::EmbedConfig& cfg, double d, std::size_t trials, int max_delay,
                                         const std::string& noise, const RandomSeeds& seeds);

/// Block means of `xs` over consecutive windows of `block` samples (partial tail dropped).
std::vector<double> block_means(const std::vector<double>& xs, std::size_t block);

enum class Format { Csv, Json };
Format parse_format(const std::string& name);

/// CSV: '#' header lines with scenario, seed, parameters, metrics and column
/// meanings, then a header row and one row per series entry. JSON: the full record.
void emit_results(const ResultRecord& record, Format format, const std::filesystem::path& path);
std::string to_csv(const ResultRecord& record);
std::string to_json(const ResultRecord& record);
ResultRecord from_json(const std::string& text);

}  // namespace malab::harness
