#include "malab/process.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "malab/error.hpp"

namespace malab::process {

namespace {

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) fail(ErrorKind::InvalidArgument, "bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

// Mass of a linear piece with edge values a, b over width w.
double piece_mass(double a, double b, double w) { return 0.5 * (a + b) * w; }

// Inverse CDF of the linear density a + (b - a) x / w on [0, w] at fraction u.
double linear_inverse(double a, double b, double w, double u) {
  const double m = piece_mass(a, b, w);
  if (m <= 0.0) return u * w;
  const double c = (b - a) / w;
  const double target = u * m;
  const double disc = std::max(0.0, a * a + 2.0 * c * target);
  const double denom = a + std::sqrt(disc);
  if (denom <= 0.0) return u * w;
  return std::clamp(2.0 * target / denom, 0.0, w);
}

}  // namespace

// ---------------------------------------------------------------- densities

double TabulatedDensity::pdf(double x) const {
  if (values.size() < 2 || x < lo || x > hi()) return 0.0;
  const double pos = (x - lo) / step;
  const auto i = std::min(static_cast<std::size_t>(pos), cells() - 1);
  const double frac = pos - static_cast<double>(i);
  return values[i] + (values[i + 1] - values[i]) * frac;
}

double TabulatedDensity::mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) m += piece_mass(values[i], values[i + 1], step);
  return m;
}

double TabulatedDensity::cdf(double x) const {
  if (x <= lo) return 0.0;
  if (x >= hi()) return mass();
  const double pos = (x - lo) / step;
  const auto i = std::min(static_cast<std::size_t>(pos), cells() - 1);
  double acc = 0.0;
  for (std::size_t j = 0; j < i; ++j) acc += piece_mass(values[j], values[j + 1], step);
  const double dx = x - (lo + step * static_cast<double>(i));
  const double slope = (values[i + 1] - values[i]) / step;
  return acc + values[i] * dx + 0.5 * slope * dx * dx;
}

TabulatedDensity tabulate(double lo, double hi, std::size_t cells, double (*pdf)(double)) {
  require(cells >= 1 && hi > lo, ErrorKind::InvalidArgument, "tabulate: bad grid");
  TabulatedDensity d{lo, (hi - lo) / static_cast<double>(cells), {}};
  d.values.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) d.values[i] = pdf(lo + d.step * static_cast<double>(i));
  return d;
}

double PiecewiseLinear::mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i < left.size(); ++i) m += piece_mass(left[i], right[i], width);
  return m;
}

void PiecewiseLinear::finalize() {
  cumulative.assign(left.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < left.size(); ++i) {
    acc += piece_mass(left[i], right[i], width);
    cumulative[i] = acc;
  }
  if (acc > 0.0) {
    for (double& c : cumulative) c /= acc;
  }
}

double PiecewiseLinear::sample(CounterRng& rng) const {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  if (cumulative.empty()) return 0.0;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u1);
  const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                   static_cast<std::ptrdiff_t>(cumulative.size() - 1)));
  return lo + width * static_cast<double>(i) + linear_inverse(left[i], right[i], width, u2);
}

double Mixture::total_mass() const {
  double atoms = 0.0;
  for (double p : atom_probs) atoms += p;
  const double tail = gamma > 0.0 ? residual.mass() : 0.0;
  return (1.0 - gamma) * atoms + gamma * tail;
}

// ---------------------------------------------------------------- noise models

std::string describe(const NoiseModel& noise) {
  std::ostringstream os;
  os << std::setprecision(17);
  std::visit(
      [&os](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BoundedUniform>) os << "uniform:" << m.omega;
        else if constexpr (std::is_same_v<T, Gaussian>) os << "gaussian:" << m.sigma;
        else os << "mixture:" << m.gamma << ":" << m.delta;
      },
      noise);
  return os.str();
}

NoiseModel parse_noise(std::string_view spec) {
  const auto colon = spec.find(':');
  require(colon != std::string_view::npos, ErrorKind::InvalidArgument,
          "noise spec must look like uniform:<omega> or gaussian:<sigma>");
  const auto kind = spec.substr(0, colon);
  const double v = parse_double(spec.substr(colon + 1), "noise parameter");
  require(v > 0.0, ErrorKind::InvalidArgument, "noise parameter must be positive");
  if (kind == "uniform") return BoundedUniform{v};
  if (kind == "gaussian") return Gaussian{v};
  fail(ErrorKind::InvalidArgument, "unknown noise kind '" + std::string(kind) + "'");
}

double noise_variance(const NoiseModel& noise) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BoundedUniform>) return m.omega * m.omega / 12.0;
        else if constexpr (std::is_same_v<T, Gaussian>) return m.sigma * m.sigma;
        else {
          // Second moment of the mixture: atoms blurred by U plus the residual.
          double ex2 = 0.0;
          for (std::size_t i = 0; i < m.atom_centers.size(); ++i) ex2 += m.atom_probs[i] * m.atom_centers[i] * m.atom_centers[i];
          ex2 = (1.0 - m.gamma) * (ex2 + m.delta * m.delta / 12.0);
          double tail = 0.0;
          const auto& r = m.residual;
          for (std::size_t i = 0; i < r.left.size(); ++i) {
            const double x = r.lo + r.width * (static_cast<double>(i) + 0.5);
            tail += piece_mass(r.left[i], r.right[i], r.width) * x * x;
          }
          return ex2 + m.gamma * tail;
        }
      },
      noise);
}

bool is_bounded(const NoiseModel& noise) { return std::holds_alternative<BoundedUniform>(noise); }

void ProcessParams::validate() const {
  require(std::isfinite(lambda) && lambda > 1.0, ErrorKind::InvalidArgument, "lambda must be > 1");
  require(omega0 >= 0.0, ErrorKind::InvalidArgument, "omega0 must be >= 0");
  require(horizon >= 1, ErrorKind::InvalidArgument, "horizon must be >= 1");
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BoundedUniform>) require(m.omega > 0.0, ErrorKind::InvalidArgument, "omega must be > 0");
        else if constexpr (std::is_same_v<T, Gaussian>) require(m.sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be > 0");
        else require(m.gamma >= 0.0 && m.gamma <= 1.0 && m.delta > 0.0, ErrorKind::InvalidArgument, "bad mixture");
      },
      noise);
}

double draw_noise(const NoiseModel& noise, CounterRng& rng) {
  return std::visit(
      [&rng](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BoundedUniform>) return rng.uniform(-0.5 * m.omega, 0.5 * m.omega);
        else if constexpr (std::is_same_v<T, Gaussian>) return m.sigma * rng.normal();
        else return sample_mixture(m, rng).value;
      },
      noise);
}

// ---------------------------------------------------------------- trajectories

Trajectory simulate_forward(const ProcessParams& params, const RandomSeeds& seeds) {
  params.validate();
  CounterRng rng = seeds.source_rng();
  const double x0 = params.omega0 > 0.0 ? rng.uniform(-0.5 * params.omega0, 0.5 * params.omega0) : 0.0;
  std::vector<double> noise(params.horizon - 1);
  for (double& w : noise) w = draw_noise(params.noise, rng);
  Trajectory t = simulate_forward(params, x0, noise);
  t.seed = seeds.source_noise;
  return t;
}

Trajectory simulate_forward(const ProcessParams& params, double x0, std::span<const double> noise) {
  params.validate();
  require(noise.size() + 1 == params.horizon, ErrorKind::InvalidArgument, "forward path needs horizon - 1 noise values");
  Trajectory t{params, 0, x0, std::vector<double>(noise.begin(), noise.end()), {}};
  t.values.resize(params.horizon);
  t.values[0] = x0;
  for (std::size_t i = 0; i + 1 < params.horizon; ++i) t.values[i + 1] = params.lambda * t.values[i] + noise[i];
  return t;
}

Trajectory simulate_backward(const ProcessParams& params, const RandomSeeds& seeds) {
  params.validate();
  CounterRng rng = seeds.source_rng().fork("backward");
  std::vector<double> noise(params.horizon);
  for (double& w : noise) w = draw_noise(params.noise, rng);
  Trajectory t = simulate_backward(params, noise);
  t.seed = seeds.source_noise;
  return t;
}

Trajectory simulate_backward(const ProcessParams& params, std::span<const double> noise) {
  params.validate();
  require(noise.size() == params.horizon, ErrorKind::InvalidArgument, "backward path needs horizon noise values");
  Trajectory t{params, 0, 0.0, std::vector<double>(noise.begin(), noise.end()), {}};
  t.values.resize(params.horizon);
  double next = 0.0;  // terminal value at index horizon
  for (std::size_t i = params.horizon; i-- > 0;) {
    t.values[i] = (next - noise[i]) / params.lambda;
    next = t.values[i];
  }
  t.x0 = t.values[0];
  return t;
}

// ---------------------------------------------------------------- mixture

Mixture decompose_noise(const TabulatedDensity& density, double gamma_target) {
  constexpr double kDeltaMin = 0x1.0p-40;
  constexpr std::size_t kMaxBins = std::size_t{1} << 26;

  require(density.values.size() >= 2 && density.step > 0.0, ErrorKind::InvalidArgument, "decompose_noise: need >= 1 cell");
  require(gamma_target >= 0.0 && gamma_target <= 1.0, ErrorKind::InvalidArgument, "gamma_target must be a probability");
  for (double v : density.values) require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument, "density must be finite and nonnegative");
  require(std::abs(density.mass() - 1.0) <= 1e-9, ErrorKind::InvalidArgument, "density must be normalized to within 1e-9");

  const std::size_t n_cells = density.cells();
  std::size_t cells_per_bin = 1;
  while (cells_per_bin < n_cells) cells_per_bin *= 2;
  std::size_t subcells = 1;  // bins per grid cell once delta < step

  const auto value_at = [&](std::size_t cell, std::size_t sub, std::size_t of) {
    if (cell >= n_cells) return 0.0;
    const double a = density.values[cell], b = density.values[cell + 1];
    return a + (b - a) * static_cast<double>(sub) / static_cast<double>(of);
  };

  for (;;) {
    const double delta = subcells > 1 ? density.step / static_cast<double>(subcells)
                                      : density.step * static_cast<double>(cells_per_bin);
    const std::size_t bins = subcells > 1 ? n_cells * subcells : (n_cells + cells_per_bin - 1) / cells_per_bin;
    if (delta < kDeltaMin || bins > kMaxBins) {
      fail(ErrorKind::DecompositionFailure, "decompose_noise: gamma target not reachable with delta >= 2^-40");
    }

    std::vector<double> mins(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      double m;
      if (subcells > 1) {
        const std::size_t cell = b / subcells, sub = b % subcells;
        m = std::min(value_at(cell, sub, subcells), value_at(cell, sub + 1, subcells));
      } else {
        const std::size_t first = b * cells_per_bin;
        const std::size_t last = first + cells_per_bin;  // grid point index at the right edge
        m = std::numeric_limits<double>::infinity();
        if (last > n_cells) m = 0.0;  // bin runs past the support
        for (std::size_t i = first; i <= std::min(last, n_cells); ++i) m = std::min(m, density.values[i]);
      }
      mins[b] = m;
    }
    double lower = 0.0;
    for (double m : mins) lower += delta * m;
    const double gamma = std::max(0.0, 1.0 - lower);

    if (gamma <= gamma_target) {
      Mixture mix;
      mix.gamma = gamma;
      mix.delta = delta;
      double acc = 0.0;
      for (std::size_t b = 0; b < bins; ++b) {
        if (mins[b] <= 0.0) continue;
        mix.atom_centers.push_back(density.lo + delta * (static_cast<double>(b) + 0.5));
        mix.atom_probs.push_back(delta * mins[b] / lower);
        acc += mix.atom_probs.back();
        mix.atom_cumulative.push_back(acc);
      }
      if (!mix.atom_cumulative.empty()) mix.atom_cumulative.back() = 1.0;

      if (gamma > 0.0) {
        auto& r = mix.residual;
        const std::size_t refine = subcells;
        r.lo = density.lo;
        r.width = density.step / static_cast<double>(refine);
        const std::size_t pieces = n_cells * refine;
        r.left.resize(pieces);
        r.right.resize(pieces);
        for (std::size_t j = 0; j < pieces; ++j) {
          const std::size_t cell = j / refine, sub = j % refine;
          const std::size_t bin = refine > 1 ? j : cell / cells_per_bin;
          r.left[j] = std::max(0.0, value_at(cell, sub, refine) - mins[bin]) / gamma;
          r.right[j] = std::max(0.0, value_at(cell, sub + 1, refine) - mins[bin]) / gamma;
        }
        r.finalize();
      }
      return mix;
    }

    if (cells_per_bin > 1) cells_per_bin /= 2;
    else subcells *= 2;
  }
}

MixtureDraw sample_mixture(const Mixture& m, CounterRng& rng) {
  MixtureDraw d;
  d.coin = rng.uniform() < m.gamma;
  const double ug = rng.uniform();
  if (!m.atom_cumulative.empty()) {
    auto it = std::upper_bound(m.atom_cumulative.begin(), m.atom_cumulative.end(), ug);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - m.atom_cumulative.begin()), m.atom_centers.size() - 1);
    d.grid = m.atom_centers[i];
  }
  d.uniform = rng.uniform(-0.5 * m.delta, 0.5 * m.delta);
  d.tail = m.residual.sample(rng);
  d.value = d.coin ? d.tail : d.grid + d.uniform;
  return d;
}

// ---------------------------------------------------------------- files

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << std::setprecision(17) << "# lambda=" << traj.params.lambda << " noise=" << describe(traj.params.noise)
      << " seed=" << traj.seed << "\n";
  for (double v : traj.values) out << v << "\n";
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_trajectory_csv(out, traj);
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

TrajectoryFile read_trajectory_csv(std::istream& in) {
  TrajectoryFile f;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line.rfind("# ", 0) == 0, ErrorKind::Io, "missing trajectory header");
  std::istringstream hs(line.substr(2));
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const auto key = field.substr(0, eq), val = field.substr(eq + 1);
    if (key == "lambda") f.lambda = std::stod(val);
    else if (key == "noise") f.noise = val;
    else if (key == "seed") f.seed = std::stoull(val);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    f.values.push_back(std::stod(line));
  }
  return f;
}

}  // namespace malab::process
