#include "stochtr/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "stochtr/parallel.hpp"

namespace stochtr {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(root ^ mix64(h));
}

std::uint64_t path_seed(std::uint64_t stream, std::uint64_t index) {
  return mix64(stream + 0x632be59bd9b4e019ULL * (index + 1));
}

BrownianPath::BrownianPath(int dim, TimeGrid time, std::vector<double> increments,
                           std::uint64_t seed)
    : dim_(dim), time_(time), inc_(std::move(increments)), seed_(seed) {
  if (dim != 1 && dim != 2) throw ConfigError("Brownian dimension must be 1 or 2");
  if (time.steps < 1 || !(time.horizon > 0.0)) throw ConfigError("need K >= 1 and T > 0");
  if (inc_.size() != static_cast<std::size_t>(time.steps) * dim)
    throw GridMismatch("increment count does not match the time grid");
  values_.assign(static_cast<std::size_t>(time.steps + 1) * dim, 0.0);
  for (int k = 0; k < time.steps; ++k)
    for (int a = 0; a < dim; ++a)
      values_[(k + 1) * dim + a] = values_[k * dim + a] + inc_[k * dim + a];
}

BrownianPath sample_path(std::uint64_t seed, int steps, double horizon, int dim) {
  if (steps < 1 || !(horizon > 0.0)) throw ConfigError("need K >= 1 and T > 0");
  const TimeGrid time{horizon, steps};
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(time.dt()));
  std::vector<double> inc(static_cast<std::size_t>(steps) * dim);
  for (double& v : inc) v = normal(engine);
  return BrownianPath(dim, time, std::move(inc), seed);
}

BrownianPath zero_path(int steps, double horizon, int dim) {
  return BrownianPath(dim, TimeGrid{horizon, steps},
                      std::vector<double>(static_cast<std::size_t>(steps) * dim, 0.0), 0);
}

BrownianPath coarsen(const BrownianPath& path, int factor) {
  if (factor < 1 || path.steps() % factor != 0)
    throw GridMismatch("coarsening factor must divide the step count");
  const int steps = path.steps() / factor;
  const int dim = path.dim();
  std::vector<double> inc(static_cast<std::size_t>(steps) * dim, 0.0);
  for (int k = 0; k < steps; ++k)
    for (int j = 0; j < factor; ++j)
      for (int a = 0; a < dim; ++a) inc[k * dim + a] += path.increment(k * factor + j, a);
  return BrownianPath(dim, TimeGrid{path.time().horizon, steps}, std::move(inc), path.seed());
}

// ---------------------------------------------------------------------------

ControlFunction::ControlFunction(TimeGrid time, int dim, std::vector<double> values,
                                 std::string label)
    : time_(time), dim_(dim), values_(std::move(values)), label_(std::move(label)) {
  if (values_.size() != static_cast<std::size_t>(time.steps) * dim)
    throw GridMismatch("control values do not match the time grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw ConfigError("control values must be finite");
}

ControlFunction ControlFunction::constant(TimeGrid time, Point value, int dim, std::string label) {
  return piecewise(time, {{0.0, value}}, dim, std::move(label));
}

ControlFunction ControlFunction::piecewise(TimeGrid time, const std::vector<ControlPiece>& pieces,
                                           int dim, std::string label) {
  std::vector<double> values(static_cast<std::size_t>(time.steps) * dim, 0.0);
  for (int k = 0; k < time.steps; ++k) {
    const double t = time.time(k);
    const ControlPiece* active = nullptr;
    for (const auto& p : pieces)
      if (p.start <= t + 1e-12 * time.horizon) active = &p;
    if (!active) continue;
    for (int a = 0; a < dim; ++a) values[k * dim + a] = active->value[a];
  }
  return ControlFunction(time, dim, std::move(values), std::move(label));
}

double ControlFunction::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s * time_.dt());
}

double ControlFunction::sup_norm() const {
  double m = 0.0;
  for (int k = 0; k < time_.steps; ++k) {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) s += value(k, a) * value(k, a);
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

Point ControlFunction::integral(int k) const {
  Point out{0.0, 0.0};
  for (int j = 0; j < k; ++j)
    for (int a = 0; a < dim_; ++a) out[a] += value(j, a) * time_.dt();
  return out;
}

bool ControlFunction::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

std::vector<std::pair<std::string, std::string>> control_probe_ids() {
  return {{"zero", "h = 0"},
          {"one", "h = 1 (every component)"},
          {"switch", "one-switch piecewise constant: h = 1 on [0, T/2), -1 after"}};
}

namespace {

double parse_double(std::string_view s, std::string_view context) {
  const std::string text(s);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("cannot parse number '" + text + "' in " + std::string(context));
}

}  // namespace

ControlFunction parse_control(std::string_view spec, TimeGrid time, int dim) {
  const Point one{1.0, dim == 2 ? 1.0 : 0.0};
  if (spec == "zero") return ControlFunction::constant(time, {0.0, 0.0}, dim, "zero");
  if (spec == "one") return ControlFunction::constant(time, one, dim, "one");
  if (spec == "switch") {
    const Point minus{-1.0, dim == 2 ? -1.0 : 0.0};
    return ControlFunction::piecewise(time, {{0.0, one}, {time.horizon / 2, minus}}, dim, "switch");
  }
  std::vector<ControlPiece> pieces;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', pos), spec.size());
    const std::string_view item = spec.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos)
      throw ConfigError("h-spec item '" + std::string(item) + "' is not t_start:value");
    ControlPiece p;
    p.start = parse_double(item.substr(0, colon), "h-spec");
    const double v = parse_double(item.substr(colon + 1), "h-spec");
    p.value = {v, dim == 2 ? v : 0.0};
    if (!pieces.empty() && p.start <= pieces.back().start)
      throw ConfigError("h-spec start times must increase");
    pieces.push_back(p);
    pos = comma + 1;
  }
  if (pieces.empty()) throw ConfigError("empty h-spec");
  return ControlFunction::piecewise(time, pieces, dim, std::string(spec));
}

// ---------------------------------------------------------------------------

namespace {

void require_compatible(const ControlFunction& h, const BrownianPath& path) {
  require_same_time(h.time(), path.time(), "control vs Brownian path");
  if (h.dim() != path.dim()) throw GridMismatch("control and path dimensions differ");
}

}  // namespace

ExponentialSample exponential_of(const ControlFunction& h, const BrownianPath& path) {
  require_compatible(h, path);
  const int K = path.steps();
  const int d = path.dim();
  const double dt = path.dt();
  ExponentialSample out;
  out.values.resize(K + 1);
  out.values[0] = 1.0;
  double log_f = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int a = 0; a < d; ++a) {
      const double hk = h.value(k, a);
      log_f += hk * path.increment(k, a) - 0.5 * hk * hk * dt;
    }
    out.values[k + 1] = std::exp(log_f);
  }
  return out;
}

double verify_exponential_sde(const ControlFunction& h, const BrownianPath& path) {
  const ExponentialSample f = exponential_of(h, path);
  const int d = path.dim();
  double euler = 1.0;
  double worst = std::abs(f.values[0] - euler);
  for (int k = 0; k < path.steps(); ++k) {
    for (int a = 0; a < d; ++a) euler += h.value(k, a) * f.values[k] * path.increment(k, a);
    worst = std::max(worst, std::abs(f.values[k + 1] - euler));
  }
  return worst;
}

double ito_integral(std::span<const double> process, const BrownianPath& path, int upto) {
  const int d = path.dim();
  if (process.size() != static_cast<std::size_t>(path.steps()) * d)
    throw GridMismatch("adapted process does not match the time grid");
  const int last = upto < 0 ? path.steps() : std::min(upto, path.steps());
  double sum = 0.0;
  for (int k = 0; k < last; ++k)
    for (int a = 0; a < d; ++a) sum += process[k * d + a] * path.increment(k, a);
  return sum;
}

IdentityReport verify_bf_identity(const AdaptedProcessFn& process, const ControlFunction& h,
                                  std::size_t paths, std::uint64_t seed, int upto) {
  const TimeGrid time = h.time();
  const int d = h.dim();
  const int last = upto < 0 ? time.steps : std::min(upto, time.steps);
  const std::uint64_t stream = derive_seed(seed, "bf-identity");
  auto acc = block_reduce<MomentAccumulator>(
      paths, 1024, [] { return MomentAccumulator(2); },
      [&](std::size_t begin, std::size_t end, MomentAccumulator& a) {
        for (std::size_t m = begin; m < end; ++m) {
          const BrownianPath path = sample_path(path_seed(stream, m), time.steps, time.horizon, d);
          const std::vector<double> y = process(path);
          const double terminal = exponential_of(h, path).terminal();
          a.add(0, ito_integral(y, path, last) * terminal);
          double lebesgue = 0.0;
          for (int k = 0; k < last; ++k)
            for (int c = 0; c < d; ++c) lebesgue += h.value(k, c) * y[k * d + c];
          a.add(1, lebesgue * time.dt() * terminal);
          a.count_sample();
        }
      },
      [](MomentAccumulator& total, const MomentAccumulator& part) { total.merge(part); });
  return {acc.estimate(0), acc.estimate(1)};
}

std::vector<Estimate> exponential_means(const ControlFunction& h, std::size_t paths,
                                        std::uint64_t seed) {
  const TimeGrid time = h.time();
  const std::uint64_t stream = derive_seed(seed, "exponential-means");
  const std::size_t n = static_cast<std::size_t>(time.steps) + 1;
  auto acc = block_reduce<MomentAccumulator>(
      paths, 1024, [n] { return MomentAccumulator(n); },
      [&](std::size_t begin, std::size_t end, MomentAccumulator& a) {
        for (std::size_t m = begin; m < end; ++m) {
          const BrownianPath path =
              sample_path(path_seed(stream, m), time.steps, time.horizon, h.dim());
          const ExponentialSample f = exponential_of(h, path);
          for (std::size_t k = 0; k < n; ++k) a.add(k, f.values[k]);
          a.count_sample();
        }
      },
      [](MomentAccumulator& total, const MomentAccumulator& part) { total.merge(part); });
  std::vector<Estimate> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = acc.estimate(k);
  return out;
}

double sde_residual_rms(const ControlFunction& h, std::size_t paths, std::uint64_t seed) {
  const TimeGrid time = h.time();
  const std::uint64_t stream = derive_seed(seed, "sde-residual");
  auto acc = block_reduce<MomentAccumulator>(
      paths, 256, [] { return MomentAccumulator(1); },
      [&](std::size_t begin, std::size_t end, MomentAccumulator& a) {
        for (std::size_t m = begin; m < end; ++m) {
          const BrownianPath path =
              sample_path(path_seed(stream, m), time.steps, time.horizon, h.dim());
          const double r = verify_exponential_sde(h, path);
          a.add(0, r * r);
          a.count_sample();
        }
      },
      [](MomentAccumulator& total, const MomentAccumulator& part) { total.merge(part); });
  return std::sqrt(acc.estimate(0).mean);
}

}  // namespace stochtr
