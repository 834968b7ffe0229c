#pragma once

// Synthetic single-turbine SCADA generator with labelled outliers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"
#include "windcast/scada.hpp"

namespace windcast {

struct TurbineSpec {
  double rho = 1.225;          // kg/m^3
  double rotor_radius = 45.0;  // m
  double cp = 0.4;
  double cut_in = 3.0;   // m/s
  double rated = 12.0;   // m/s
  double cut_out = 25.0; // m/s
  double rated_power = 2.0e6;  // W

  void validate() const {
    if (!(cut_in < rated && rated < cut_out))
      throw Error(ErrorKind::parameter, "turbine speeds must satisfy cut_in < rated < cut_out");
    if (!(cp > 0.0 && cp <= 0.593)) throw Error(ErrorKind::parameter, "cp must lie in (0, 0.593]");
    if (!(rho > 0.0 && rotor_radius > 0.0 && rated_power > 0.0))
      throw Error(ErrorKind::parameter, "rho, rotor radius and rated power must be positive");
  }
};

/// Power in W at hub-height wind speed `u` (m/s): cubic law between cut-in
/// and rated speed, capped at rated power, zero outside the operating range.
inline double power_curve(const TurbineSpec& spec, double u) {
  if (u < spec.cut_in || u > spec.cut_out) return 0.0;
  if (u > spec.rated) return spec.rated_power;
  const double p =
      0.5 * spec.rho * std::numbers::pi * spec.rotor_radius * spec.rotor_radius * spec.cp * u * u * u;
  return std::min(p, spec.rated_power);
}

enum class OutlierKind { stuck_at, scaled, random };

inline const char* to_string(OutlierKind k) {
  switch (k) {
    case OutlierKind::stuck_at: return "stuck-at";
    case OutlierKind::scaled: return "scaled";
    case OutlierKind::random: return "random";
  }
  return "?";
}

inline OutlierKind outlier_kind_from_string(const std::string& s) {
  if (s == "stuck-at" || s == "stuck_at") return OutlierKind::stuck_at;
  if (s == "scaled") return OutlierKind::scaled;
  if (s == "random") return OutlierKind::random;
  throw Error(ErrorKind::usage, "unknown outlier kind '" + s + "'");
}

struct SynthConfig {
  std::size_t n_records = 20000;
  std::int64_t cadence = 600;
  std::int64_t start_timestamp = 1356998400;  // 2013-01-01T00:00:00Z
  double weibull_shape = 2.0;
  double weibull_scale = 8.0;
  // Two wrapped-normal direction modes: dominant north-west, secondary south-east.
  double dominant_direction = 315.0;
  double secondary_direction = 135.0;
  double dominant_weight = 0.65;
  double direction_spread = 30.0;     // degrees
  double direction_persistence = 0.95;
  double noise_std = 0.02;            // fraction of rated power
  double noise_autocorrelation = 0.8; // AR(1) coefficient of the power noise
  double direction_modulation = 0.03;
  double outlier_rate = 0.05;
  OutlierKind outlier_kind = OutlierKind::scaled;
  double outlier_scale = 3.0;
  double spinup_fraction = 0.005;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_records < 1) throw Error(ErrorKind::parameter, "n_records must be >= 1");
    if (cadence < 1) throw Error(ErrorKind::parameter, "cadence must be >= 1 s");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 0.2))
      throw Error(ErrorKind::parameter, "outlier_rate must lie in [0, 0.2]");
    if (!(weibull_shape > 0.0 && weibull_scale > 0.0))
      throw Error(ErrorKind::parameter, "weibull parameters must be positive");
    if (!(noise_std > 0.0)) throw Error(ErrorKind::parameter, "noise_std must be positive");
    if (!(std::abs(noise_autocorrelation) < 1.0))
      throw Error(ErrorKind::parameter, "noise_autocorrelation must lie in (-1, 1)");
  }
};

struct SynthResult {
  ScadaSeries series;
  std::vector<std::size_t> outliers;   // record indices, ascending
  std::vector<double> clean_power_kw;  // noise-free curve value per record
};

/// Deterministic in `config.seed`. Outliers deviate from the clean curve by at
/// least five noise standard deviations; inliers stay within [-3 sigma, rated].
inline SynthResult generate(const TurbineSpec& spec, const SynthConfig& config) {
  spec.validate();
  config.validate();
  const std::size_t n = config.n_records;
  Rng rng = make_rng(config.seed, 1);

  // Wind speed: i.i.d. Weibull smoothed by a causal 3-point moving average.
  std::weibull_distribution<double> weibull(config.weibull_shape, config.weibull_scale);
  std::vector<double> raw(n + 2);
  for (double& w : raw) w = weibull(rng);
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) speed[i] = (raw[i] + raw[i + 1] + raw[i + 2]) / 3.0;

  // Direction: persistent regime switching between the two prevailing modes.
  std::vector<double> direction(n);
  bool dominant = uniform01(rng) < config.dominant_weight;
  for (std::size_t i = 0; i < n; ++i) {
    if (uniform01(rng) > config.direction_persistence) dominant = uniform01(rng) < config.dominant_weight;
    const double centre = dominant ? config.dominant_direction : config.secondary_direction;
    double d = std::fmod(gaussian(rng, centre, config.direction_spread), 360.0);
    if (d < 0.0) d += 360.0;
    if (d >= 360.0) d = 0.0;
    direction[i] = d;
  }

  const double sigma = config.noise_std * spec.rated_power;  // W
  const double innovation = sigma * std::sqrt(1.0 - config.noise_autocorrelation * config.noise_autocorrelation);
  const double deg = std::numbers::pi / 180.0;

  SynthResult out;
  out.clean_power_kw.resize(n);
  std::vector<double> power(n);
  double noise = gaussian(rng, 0.0, sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const double modulation =
        1.0 + config.direction_modulation * std::cos((direction[i] - config.dominant_direction) * deg);
    const double clean = std::min(power_curve(spec, speed[i]) * modulation, spec.rated_power);
    if (i > 0) noise = config.noise_autocorrelation * noise + gaussian(rng, 0.0, innovation);
    out.clean_power_kw[i] = clean / 1000.0;
    power[i] = std::clamp(clean + noise, -3.0 * sigma, spec.rated_power);
  }

  // Parked-rotor spin-up: slightly negative readings at low wind (inliers).
  for (std::size_t i = 0; i < n; ++i) {
    if (speed[i] < spec.cut_in && uniform01(rng) < config.spinup_fraction)
      power[i] = -uniform(rng, 0.0, 0.5 * sigma);
  }

  if (config.outlier_rate > 0.0) {
    const double min_dev = 5.0 * sigma;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < n; ++i) {
      const double clean = out.clean_power_kw[i] * 1000.0;
      switch (config.outlier_kind) {
        case OutlierKind::scaled:
          if (std::abs(config.outlier_scale - 1.0) * clean >= min_dev) eligible.push_back(i);
          break;
        case OutlierKind::stuck_at:
          if (clean >= min_dev) eligible.push_back(i);
          break;
        case OutlierKind::random:
          if (std::max(clean, spec.rated_power - clean) >= min_dev) eligible.push_back(i);
          break;
      }
    }
    const auto wanted = static_cast<std::size_t>(std::llround(config.outlier_rate * static_cast<double>(n)));
    std::shuffle(eligible.begin(), eligible.end(), rng);
    eligible.resize(std::min(wanted, eligible.size()));
    std::sort(eligible.begin(), eligible.end());
    for (std::size_t i : eligible) {
      const double clean = out.clean_power_kw[i] * 1000.0;
      switch (config.outlier_kind) {
        case OutlierKind::scaled: power[i] = config.outlier_scale * clean; break;
        case OutlierKind::stuck_at: power[i] = 0.0; break;
        case OutlierKind::random: {
          double v = 0.0;
          do {
            v = uniform(rng, 0.0, spec.rated_power);
          } while (std::abs(v - clean) < min_dev);
          power[i] = v;
          break;
        }
      }
    }
    out.outliers = std::move(eligible);
  }

  std::vector<ScadaRecord> recs(n);
  for (std::size_t i = 0; i < n; ++i) {
    ScadaRecord& r = recs[i];
    r.timestamp = config.start_timestamp + static_cast<std::int64_t>(i) * config.cadence;
    const double t = static_cast<double>(r.timestamp);
    const double load = std::max(0.0, out.clean_power_kw[i] * 1000.0 / spec.rated_power);
    r.wind_speed = speed[i];
    r.wind_direction = direction[i];
    r.power = power[i] / 1000.0;
    r.ambient_temp = 6.0 + 9.0 * std::sin(2.0 * std::numbers::pi * t / (365.25 * 86400.0)) +
                     3.0 * std::sin(2.0 * std::numbers::pi * t / 86400.0) + gaussian(rng, 0.0, 0.5);
    r.nacelle_temp = r.ambient_temp + 12.0 + 14.0 * load + gaussian(rng, 0.0, 0.8);
    r.hydraulic_oil_temp = 30.0 + 0.6 * (r.nacelle_temp - r.ambient_temp) + 0.3 * r.ambient_temp +
                           gaussian(rng, 0.0, 0.7);
    r.hydraulic_oil_pressure = 175.0 + 25.0 * load + gaussian(rng, 0.0, 1.5);
  }
  out.series = ScadaSeries(std::move(recs), config.cadence);
  return out;
}

}  // namespace windcast
