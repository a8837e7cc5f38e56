#include "mgfreq/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace mgfreq {

namespace {

constexpr double kWindMax = 25.0;
constexpr double kIrradianceMax = 1200.0;
constexpr const char* kProfileHeader = "t,load_pu,v_w1,v_w2,g_eff1,g_eff2,t_amb";

std::size_t step_count(double duration, double ts) {
  if (!(duration > 0.0)) throw std::invalid_argument("profiles: duration must be positive");
  if (!(ts > 0.0)) throw std::invalid_argument("profiles: ts must be positive");
  const double n = duration / ts;
  const auto rounded = static_cast<std::size_t>(std::llround(n));
  if (std::abs(n - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, n)) {
    throw std::invalid_argument(fmt::format("profiles: duration {} is not a multiple of ts {}", duration, ts));
  }
  return rounded;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

/// Euler-Maruyama discretization of dx = theta (mu - x) dt + sigma dW, started at mu.
std::vector<double> ornstein_uhlenbeck(std::size_t n, double ts, double mu, double theta, double sigma,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n + 1);
  x[0] = mu;
  const double sqrt_ts = std::sqrt(ts);
  for (std::size_t k = 1; k <= n; ++k) {
    x[k] = x[k - 1] + theta * (mu - x[k - 1]) * ts + sigma * sqrt_ts * normal(rng);
  }
  return x;
}

/// Trapezoidal pulse: ramps 0 -> 1 over `ramp`, holds for `hold`, ramps back.
double pulse(double t, double start, double ramp, double hold) {
  const double u = t - start;
  if (u <= 0.0 || u >= 2.0 * ramp + hold) return 0.0;
  if (u < ramp) return u / ramp;
  if (u <= ramp + hold) return 1.0;
  return (2.0 * ramp + hold - u) / ramp;
}

void clip(std::vector<double>& v, double lo, double hi) {
  for (double& x : v) x = std::clamp(x, lo, hi);
}

}  // namespace

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "step") return ScenarioKind::kStep;
  if (name == "moderate") return ScenarioKind::kModerate;
  if (name == "rapid") return ScenarioKind::kRapid;
  throw std::invalid_argument(fmt::format("unknown scenario kind '{}' (expected step, moderate or rapid)", name));
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStep:
      return "step";
    case ScenarioKind::kModerate:
      return "moderate";
    case ScenarioKind::kRapid:
      return "rapid";
  }
  return "unknown";
}

void ProfileSet::validate() const {
  const std::size_t n = t.size();
  if (n < 2) throw std::invalid_argument("profiles: need at least two samples");
  for (const auto* col : {&load_pu, &v_w1, &v_w2, &g_eff1, &g_eff2, &t_amb}) {
    if (col->size() != n) throw std::invalid_argument("profiles: columns have different lengths");
  }
  if (!(ts > 0.0)) throw std::invalid_argument("profiles: ts must be positive");
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(t[k] - static_cast<double>(k) * ts) > 1e-6 * ts) {
      throw std::invalid_argument(fmt::format("profiles: sample {} at t={} is off the {} s grid", k, t[k], ts));
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (v_w1[k] < 0.0 || v_w2[k] < 0.0) throw std::invalid_argument("profiles: negative wind speed");
    if (g_eff1[k] < 0.0 || g_eff2[k] < 0.0) throw std::invalid_argument("profiles: negative irradiance");
  }
}

ProfileSet constant_profiles(double duration, const ProfileOptions& o) {
  const std::size_t n = step_count(duration, o.ts);
  ProfileSet p;
  p.ts = o.ts;
  p.t.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) p.t[k] = static_cast<double>(k) * o.ts;
  p.load_pu.assign(n + 1, 0.0);
  p.v_w1.assign(n + 1, o.wind_nominal);
  p.v_w2.assign(n + 1, o.wind_nominal);
  p.g_eff1.assign(n + 1, o.irradiance_nominal);
  p.g_eff2.assign(n + 1, o.irradiance_nominal);
  p.t_amb.assign(n + 1, o.ambient_nominal);
  return p;
}

ProfileSet generate_profiles(ScenarioKind kind, std::uint64_t seed, double duration, const ProfileOptions& o) {
  ProfileSet p = constant_profiles(duration, o);
  const std::size_t n = p.size() - 1;

  if (kind == ScenarioKind::kStep) {
    for (std::size_t k = 0; k <= n; ++k) {
      double load = 0.0;
      for (const LoadEvent& e : o.step_events) {
        // Events are placed on the sample grid.
        if (static_cast<double>(k) >= std::round(e.time / o.ts)) load += e.delta;
      }
      p.load_pu[k] = load;
    }
    return p;
  }

  const double f = kind == ScenarioKind::kRapid ? o.rapid_volatility_factor : 1.0;
  auto rng_load = stream(seed, 1);
  auto rng_w1 = stream(seed, 2);
  auto rng_w2 = stream(seed, 3);
  auto rng_g1 = stream(seed, 4);
  auto rng_g2 = stream(seed, 5);
  p.load_pu = ornstein_uhlenbeck(n, o.ts, 0.0, o.load_reversion, f * o.load_volatility, rng_load);
  p.v_w1 = ornstein_uhlenbeck(n, o.ts, o.wind_nominal, o.wind_reversion, f * o.wind_volatility, rng_w1);
  p.v_w2 = ornstein_uhlenbeck(n, o.ts, o.wind_nominal, o.wind_reversion, f * o.wind_volatility, rng_w2);
  p.g_eff1 = ornstein_uhlenbeck(n, o.ts, o.irradiance_nominal, o.irradiance_reversion, f * o.irradiance_volatility,
                                rng_g1);
  p.g_eff2 = ornstein_uhlenbeck(n, o.ts, o.irradiance_nominal, o.irradiance_reversion, f * o.irradiance_volatility,
                                rng_g2);

  if (kind == ScenarioKind::kRapid) {
    // Cloud shadows on the PV arrays and gusts on the turbines, Poisson arrivals.
    auto rng_ev = stream(seed, 6);
    std::exponential_distribution<double> gap(1.0 / o.rapid_event_interval);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double t_event = gap(rng_ev);
    while (t_event < duration) {
      const bool cloud = unit(rng_ev) < 0.5;
      const bool first = unit(rng_ev) < 0.5;
      const double ramp = 1.0 + 2.0 * unit(rng_ev);
      const double hold = 2.0 + 4.0 * unit(rng_ev);
      const double depth = 0.3 + 0.3 * unit(rng_ev);
      const double gust_sign = unit(rng_ev) < 0.5 ? -1.0 : 1.0;
      auto& series = cloud ? (first ? p.g_eff1 : p.g_eff2) : (first ? p.v_w1 : p.v_w2);
      for (std::size_t k = 0; k <= n; ++k) {
        const double w = pulse(p.t[k], t_event, ramp, hold);
        if (w == 0.0) continue;
        if (cloud) {
          series[k] *= 1.0 - depth * w;
        } else {
          series[k] += gust_sign * 10.0 * depth * w;
        }
      }
      t_event += gap(rng_ev);
    }
  }

  clip(p.v_w1, 0.0, kWindMax);
  clip(p.v_w2, 0.0, kWindMax);
  clip(p.g_eff1, 0.0, kIrradianceMax);
  clip(p.g_eff2, 0.0, kIrradianceMax);
  return p;
}

ProfileSet read_profiles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open profile file '{}'", path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(fmt::format("profile file '{}' is empty", path));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kProfileHeader) {
    throw std::runtime_error(fmt::format("profile file '{}': header must be '{}'", path, kProfileHeader));
  }

  ProfileSet p;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(fmt::format("profile file '{}' line {}: bad number '{}'", path, line_no, cell));
      }
    }
    if (values.size() != 7) {
      throw std::runtime_error(fmt::format("profile file '{}' line {}: expected 7 columns", path, line_no));
    }
    p.t.push_back(values[0]);
    p.load_pu.push_back(values[1]);
    p.v_w1.push_back(values[2]);
    p.v_w2.push_back(values[3]);
    p.g_eff1.push_back(values[4]);
    p.g_eff2.push_back(values[5]);
    p.t_amb.push_back(values[6]);
  }
  if (p.t.size() < 2) throw std::runtime_error(fmt::format("profile file '{}' has fewer than two rows", path));
  p.ts = p.t[1] - p.t[0];
  p.validate();
  return p;
}

void write_profiles_csv(const ProfileSet& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write profile file '{}'", path));
  out << kProfileHeader << '\n';
  for (std::size_t k = 0; k < p.size(); ++k) {
    out << fmt::format("{:.15g},{:.15g},{:.15g},{:.15g},{:.15g},{:.15g},{:.15g}\n", p.t[k], p.load_pu[k], p.v_w1[k],
                       p.v_w2[k], p.g_eff1[k], p.g_eff2[k], p.t_amb[k]);
  }
}

}  // namespace mgfreq
