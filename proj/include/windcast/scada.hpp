#pragma once

// SCADA telemetry: records, CSV ingestion, min-max normalization, supervised
// windowing for the four model variants and the train/validation/test split.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast {

struct ScadaRecord {
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  double wind_speed = 0.0;     // m/s
  double wind_direction = 0.0; // degrees, [0, 360)
  double power = 0.0;          // kW; negative while a parked rotor spins up
  double ambient_temp = 0.0;
  double nacelle_temp = 0.0;
  double hydraulic_oil_temp = 0.0;
  double hydraulic_oil_pressure = 0.0;
};

enum class Feature {
  wind_speed,
  wind_direction,
  power,
  ambient_temp,
  nacelle_temp,
  hydraulic_oil_temp,
  hydraulic_oil_pressure,
};

inline constexpr std::array<Feature, 7> kAllFeatures = {
    Feature::wind_speed,   Feature::wind_direction,     Feature::power,
    Feature::ambient_temp, Feature::nacelle_temp,       Feature::hydraulic_oil_temp,
    Feature::hydraulic_oil_pressure,
};

inline const char* feature_name(Feature f) {
  switch (f) {
    case Feature::wind_speed: return "wind_speed";
    case Feature::wind_direction: return "wind_direction";
    case Feature::power: return "power";
    case Feature::ambient_temp: return "ambient_temp";
    case Feature::nacelle_temp: return "nacelle_temp";
    case Feature::hydraulic_oil_temp: return "hydraulic_oil_temp";
    case Feature::hydraulic_oil_pressure: return "hydraulic_oil_pressure";
  }
  return "?";
}

inline std::optional<Feature> feature_from_name(std::string_view name) {
  for (Feature f : kAllFeatures) {
    if (name == feature_name(f)) return f;
  }
  return std::nullopt;
}

inline double feature_value(const ScadaRecord& r, Feature f) {
  switch (f) {
    case Feature::wind_speed: return r.wind_speed;
    case Feature::wind_direction: return r.wind_direction;
    case Feature::power: return r.power;
    case Feature::ambient_temp: return r.ambient_temp;
    case Feature::nacelle_temp: return r.nacelle_temp;
    case Feature::hydraulic_oil_temp: return r.hydraulic_oil_temp;
    case Feature::hydraulic_oil_pressure: return r.hydraulic_oil_pressure;
  }
  return 0.0;
}

inline double& feature_ref(ScadaRecord& r, Feature f) {
  switch (f) {
    case Feature::wind_speed: return r.wind_speed;
    case Feature::wind_direction: return r.wind_direction;
    case Feature::power: return r.power;
    case Feature::ambient_temp: return r.ambient_temp;
    case Feature::nacelle_temp: return r.nacelle_temp;
    case Feature::hydraulic_oil_temp: return r.hydraulic_oil_temp;
    case Feature::hydraulic_oil_pressure: return r.hydraulic_oil_pressure;
  }
  return r.wind_speed;
}

/// A gap between records[after] and records[after + 1] larger than the cadence.
struct Gap {
  std::size_t after = 0;
  std::int64_t missing_seconds = 0;
};

class ScadaSeries {
 public:
  std::vector<ScadaRecord> records;
  std::int64_t cadence = 600;
  std::size_t skipped_rows = 0;  // unparsable or invalid rows dropped by the reader
  bool resorted = false;         // input was not in timestamp order
  std::vector<std::string> absent_fields;  // optional columns missing from the file (read as 0)

  ScadaSeries() = default;
  ScadaSeries(std::vector<ScadaRecord> recs, std::int64_t cadence_seconds)
      : records(std::move(recs)), cadence(cadence_seconds) {
    index_gaps();
  }

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  // Recomputes gap bookkeeping; call after mutating `records`.
  void index_gaps() {
    gaps_.clear();
    breaks_prefix_.assign(records.size() + 1, 0);
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
      const std::int64_t dt = records[i + 1].timestamp - records[i].timestamp;
      const bool brk = dt != cadence;
      if (brk) gaps_.push_back({i, dt - cadence});
      breaks_prefix_[i + 1] = breaks_prefix_[i] + (brk ? 1 : 0);
    }
    if (!records.empty()) breaks_prefix_[records.size()] = breaks_prefix_[records.size() - 1];
  }

  const std::vector<Gap>& gaps() const { return gaps_; }

  /// True when records [first, last] are spaced exactly one cadence apart.
  bool contiguous(std::size_t first, std::size_t last) const {
    if (last >= records.size() || first > last) return false;
    return breaks_prefix_[last] == breaks_prefix_[first];
  }

  std::vector<double> column(Feature f) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(feature_value(r, f));
    return out;
  }

 private:
  std::vector<Gap> gaps_;
  // breaks_prefix_[i] = number of cadence breaks between consecutive records before index i
  std::vector<std::size_t> breaks_prefix_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

/// Maps each record field to the header name used by a particular SCADA export.
struct ColumnMap {
  std::map<std::string, std::string> names = {
      {"timestamp", "timestamp"},
      {"wind_speed", "wind_speed"},
      {"wind_direction", "wind_direction"},
      {"power", "power"},
      {"ambient_temp", "ambient_temp"},
      {"nacelle_temp", "nacelle_temp"},
      {"hydraulic_oil_temp", "hydraulic_oil_temp"},
      {"hydraulic_oil_pressure", "hydraulic_oil_pressure"},
  };

  const std::string& header_for(const std::string& field) const { return names.at(field); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                        s.front() == '"'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Accepts epoch seconds or ISO-8601 `YYYY-MM-DD[T ]HH:MM[:SS][Z]` (UTC).
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  s = detail::trim(s);
  if (s.empty()) return std::nullopt;
  const bool numeric = std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || c == '-' || c == '+';
  }) && s.find('-', 1) == std::string_view::npos;
  if (numeric) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
    return std::nullopt;
  }
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':')
    return std::nullopt;
  auto y = detail::parse_int(s.substr(0, 4));
  auto mo = detail::parse_int(s.substr(5, 2));
  auto d = detail::parse_int(s.substr(8, 2));
  auto h = detail::parse_int(s.substr(11, 2));
  auto mi = detail::parse_int(s.substr(14, 2));
  int sec = 0;
  std::string_view rest = s.substr(16);
  if (!rest.empty() && rest.front() == ':') {
    auto sv = detail::parse_int(rest.substr(1, 2));
    if (!sv) return std::nullopt;
    sec = *sv;
    rest = rest.substr(std::min<std::size_t>(3, rest.size()));
  }
  if (!rest.empty() && rest != "Z") return std::nullopt;
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || sec > 60) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + *h * 3600 + *mi * 60 + sec;
}

inline std::int64_t infer_cadence(const std::vector<ScadaRecord>& recs, std::int64_t fallback) {
  if (recs.size() < 2) return fallback;
  std::map<std::int64_t, std::size_t> counts;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    const std::int64_t dt = recs[i + 1].timestamp - recs[i].timestamp;
    if (dt > 0) ++counts[dt];
  }
  if (counts.empty()) return fallback;
  return std::max_element(counts.begin(), counts.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->first;
}

/// Reads a SCADA CSV stream. Invalid rows are skipped and counted in
/// `skipped_rows`; duplicate timestamps keep the first occurrence. Fields
/// named in `optional` may be absent from the header and read as 0.
inline ScadaSeries parse_csv(std::istream& in, const ColumnMap& schema = {},
                             std::int64_t default_cadence = 600,
                             std::span<const std::string> optional = {}) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::empty_data, "CSV has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);

  static constexpr std::array<const char*, 8> kFields = {
      "timestamp",    "wind_speed",   "wind_direction",     "power",
      "ambient_temp", "nacelle_temp", "hydraulic_oil_temp", "hydraulic_oil_pressure"};
  constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();
  std::array<std::size_t, 8> col{};
  std::vector<std::string> absent;
  for (std::size_t f = 0; f < kFields.size(); ++f) {
    const std::string& want = schema.header_for(kFields[f]);
    auto it = std::find(header.begin(), header.end(), want);
    if (it == header.end()) {
      if (f == 0 || std::find(optional.begin(), optional.end(), kFields[f]) == optional.end())
        throw Error(ErrorKind::schema, "missing column '" + want + "'");
      col[f] = kAbsent;
      absent.emplace_back(kFields[f]);
      continue;
    }
    col[f] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<ScadaRecord> recs;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < header.size()) {
      ++skipped;
      continue;
    }
    ScadaRecord r;
    auto ts = parse_timestamp(cells[col[0]]);
    std::array<std::optional<double>, 7> v;
    for (std::size_t f = 0; f < 7; ++f)
      v[f] = col[f + 1] == kAbsent ? std::optional<double>(0.0) : detail::parse_double(cells[col[f + 1]]);
    if (!ts || std::any_of(v.begin(), v.end(), [](const auto& x) { return !x.has_value(); }) ||
        *v[0] < 0.0) {
      ++skipped;
      continue;
    }
    r.timestamp = *ts;
    r.wind_speed = *v[0];
    r.wind_direction = std::fmod(*v[1], 360.0);
    if (r.wind_direction < 0.0) r.wind_direction += 360.0;
    if (r.wind_direction >= 360.0) r.wind_direction = 0.0;
    r.power = *v[2];
    r.ambient_temp = *v[3];
    r.nacelle_temp = *v[4];
    r.hydraulic_oil_temp = *v[5];
    r.hydraulic_oil_pressure = *v[6];
    recs.push_back(r);
  }
  if (recs.empty()) throw Error(ErrorKind::empty_data, "no valid rows");

  ScadaSeries series;
  const bool sorted = std::is_sorted(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });
  if (!sorted) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    series.resorted = true;
  }
  const auto dup_end = std::unique(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
    return a.timestamp == b.timestamp;
  });
  skipped += static_cast<std::size_t>(recs.end() - dup_end);
  recs.erase(dup_end, recs.end());

  series.cadence = infer_cadence(recs, default_cadence);
  series.records = std::move(recs);
  series.skipped_rows = skipped;
  series.absent_fields = std::move(absent);
  series.index_gaps();
  return series;
}

inline ScadaSeries parse_csv(const std::string& path, const ColumnMap& schema = {},
                             std::int64_t default_cadence = 600,
                             std::span<const std::string> optional = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return parse_csv(in, schema, default_cadence, optional);
}

/// Writes the ingest schema (epoch-second timestamps). `cluster_ids`, when
/// given, adds a trailing `cluster_id` column.
inline void write_csv(std::ostream& out, const ScadaSeries& series,
                      std::span<const int> cluster_ids = {}) {
  out << "timestamp,wind_speed,wind_direction,power,ambient_temp,nacelle_temp,"
         "hydraulic_oil_temp,hydraulic_oil_pressure";
  if (!cluster_ids.empty()) out << ",cluster_id";
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, p - buf);
  };
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    const auto& r = series.records[i];
    out << r.timestamp;
    for (Feature f : kAllFeatures) {
      out << ',';
      put(feature_value(r, f));
    }
    if (!cluster_ids.empty()) out << ',' << cluster_ids[i];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Normalization

struct FeatureRange {
  double min = 0.0;
  double max = 1.0;
  double span() const { return max - min; }
};

/// Per-feature min/max used for scaling into [0, 1].
struct NormStats {
  std::map<Feature, FeatureRange> ranges;

  const FeatureRange& at(Feature f) const {
    auto it = ranges.find(f);
    if (it == ranges.end())
      throw Error(ErrorKind::contract, std::string("no normalization range for ") + feature_name(f));
    return it->second;
  }
};

inline void require_nondegenerate(const FeatureRange& r, std::string_view what = "feature") {
  if (!(r.max > r.min))
    throw Error(ErrorKind::degenerate_feature,
                std::string(what) + " has z_max <= z_min (" + std::to_string(r.min) + ", " +
                    std::to_string(r.max) + ")");
}

inline double normalize(double value, const FeatureRange& r) {
  return (value - r.min) / (r.max - r.min);
}

inline double inverse_normalize(double scaled, const FeatureRange& r) {
  return scaled * (r.max - r.min) + r.min;
}

inline std::vector<double> normalize(std::span<const double> values, const FeatureRange& r) {
  require_nondegenerate(r);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return normalize(v, r); });
  return out;
}

inline std::vector<double> inverse_normalize(std::span<const double> values,
                                             const FeatureRange& r) {
  require_nondegenerate(r);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return inverse_normalize(v, r); });
  return out;
}

inline FeatureRange range_of(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::empty_data, "range of empty column");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

// ---------------------------------------------------------------------------
// Model variants and supervised windows

enum class ModelVariant { M1 = 1, M2 = 2, M3 = 3, M4 = 4 };

inline constexpr std::array<ModelVariant, 4> kAllVariants = {ModelVariant::M1, ModelVariant::M2,
                                                             ModelVariant::M3, ModelVariant::M4};

inline std::vector<Feature> variant_features(ModelVariant v) {
  switch (v) {
    case ModelVariant::M1: return {Feature::wind_speed};
    case ModelVariant::M2: return {Feature::wind_speed, Feature::wind_direction};
    case ModelVariant::M3: return {Feature::wind_speed, Feature::power};
    case ModelVariant::M4: return {Feature::wind_speed, Feature::wind_direction, Feature::power};
  }
  return {};
}

inline std::size_t input_dim(ModelVariant v) { return variant_features(v).size(); }

inline std::string variant_name(ModelVariant v) { return "M" + std::to_string(static_cast<int>(v)); }

inline ModelVariant variant_from_name(std::string_view name) {
  for (auto v : kAllVariants)
    if (name == variant_name(v)) return v;
  throw Error(ErrorKind::usage, "unknown model variant '" + std::string(name) + "'");
}

/// Dense window storage, row-major over (sample, step, feature).
struct Windows {
  std::size_t count = 0;
  std::size_t lookback = 0;
  std::size_t input_dim = 0;
  std::vector<double> values;

  double at(std::size_t sample, std::size_t step, std::size_t feature) const {
    return values[(sample * lookback + step) * input_dim + feature];
  }
  std::span<const double> sample(std::size_t i) const {
    return {values.data() + i * lookback * input_dim, lookback * input_dim};
  }
};

enum class SplitMode { random, chronological };

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct SupervisedSet {
  ModelVariant variant = ModelVariant::M1;
  std::size_t lookback = 0;
  std::size_t horizon = 0;
  Windows inputs;
  std::vector<double> targets;
  std::vector<double> last_power;             // normalized power at the final input step
  std::vector<std::size_t> window_start;      // record index of each sample's first input
  std::vector<std::int64_t> target_timestamp;
  SplitIndices split;
  NormStats norm_stats;
  std::size_t clamped_count = 0;

  std::size_t size() const { return targets.size(); }
};

/// Record indices i such that [i, i+L+H-1] is gap-free.
inline std::vector<std::size_t> usable_window_starts(const ScadaSeries& series, std::size_t lookback,
                                                     std::size_t horizon) {
  std::vector<std::size_t> starts;
  const std::size_t span = lookback + horizon;
  if (series.size() < span) return starts;
  for (std::size_t i = 0; i + span <= series.size(); ++i) {
    if (series.contiguous(i, i + span - 1)) starts.push_back(i);
  }
  return starts;
}

inline SplitIndices make_split(std::size_t n, SplitMode mode, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (mode == SplitMode::random) {
    Rng rng = make_rng(seed, 0x5917);
    std::shuffle(order.begin(), order.end(), rng);
  }
  const std::size_t n_small = n / 10;
  const std::size_t n_train = n - 2 * n_small;
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.validation.assign(order.begin() + n_train, order.begin() + n_train + n_small);
  s.test.assign(order.begin() + n_train + n_small, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// Normalizes window features using ranges fitted on the training windows only.
/// Values outside the fitted range are clamped into [0, 1] and counted.
inline SupervisedSet build_supervised(const ScadaSeries& series, ModelVariant variant,
                                      std::size_t lookback, std::size_t horizon,
                                      std::uint64_t seed, SplitMode mode = SplitMode::random) {
  if (lookback < 1 || horizon < 1)
    throw Error(ErrorKind::parameter, "lookback and horizon must be >= 1");
  if (series.size() < lookback + horizon + 10)
    throw Error(ErrorKind::insufficient_data,
                "series has " + std::to_string(series.size()) + " records, need at least " +
                    std::to_string(lookback + horizon + 10));
  const auto starts = usable_window_starts(series, lookback, horizon);
  if (starts.size() < 10)
    throw Error(ErrorKind::insufficient_data,
                "only " + std::to_string(starts.size()) + " gap-free windows");

  SupervisedSet set;
  set.variant = variant;
  set.lookback = lookback;
  set.horizon = horizon;
  set.split = make_split(starts.size(), mode, seed);

  const auto features = variant_features(variant);
  std::vector<Feature> fitted = features;
  if (std::find(fitted.begin(), fitted.end(), Feature::power) == fitted.end())
    fitted.push_back(Feature::power);

  for (Feature f : fitted) {
    FeatureRange r{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    for (std::size_t s : set.split.train) {
      const std::size_t start = starts[s];
      for (std::size_t k = start; k < start + lookback; ++k) {
        const double v = feature_value(series.records[k], f);
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
      }
      if (f == Feature::power) {
        const double v = series.records[start + lookback + horizon - 1].power;
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
      }
    }
    require_nondegenerate(r, feature_name(f));
    set.norm_stats.ranges[f] = r;
  }

  auto scaled = [&](double v, Feature f) {
    double z = normalize(v, set.norm_stats.ranges.at(f));
    if (z < 0.0 || z > 1.0) {
      ++set.clamped_count;
      z = std::clamp(z, 0.0, 1.0);
    }
    return z;
  };

  const std::size_t n = starts.size();
  const std::size_t dim = features.size();
  set.inputs.count = n;
  set.inputs.lookback = lookback;
  set.inputs.input_dim = dim;
  set.inputs.values.resize(n * lookback * dim);
  set.targets.resize(n);
  set.last_power.resize(n);
  set.window_start = starts;
  set.target_timestamp.resize(n);
  const FeatureRange& power_range = set.norm_stats.ranges.at(Feature::power);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t start = starts[s];
    for (std::size_t t = 0; t < lookback; ++t) {
      for (std::size_t d = 0; d < dim; ++d) {
        set.inputs.values[(s * lookback + t) * dim + d] =
            scaled(feature_value(series.records[start + t], features[d]), features[d]);
      }
    }
    const auto& target_rec = series.records[start + lookback + horizon - 1];
    set.targets[s] = scaled(target_rec.power, Feature::power);
    set.target_timestamp[s] = target_rec.timestamp;
    set.last_power[s] =
        std::clamp(normalize(series.records[start + lookback - 1].power, power_range), 0.0, 1.0);
  }
  return set;
}

/// Windows an arbitrary series with previously fitted statistics (inference
/// path). Every gap-free window with an in-range target is emitted.
inline SupervisedSet window_with_stats(const ScadaSeries& series, ModelVariant variant,
                                       std::size_t lookback, std::size_t horizon,
                                       const NormStats& stats) {
  const auto starts = usable_window_starts(series, lookback, horizon);
  if (starts.empty()) throw Error(ErrorKind::insufficient_data, "no gap-free windows");
  SupervisedSet set;
  set.variant = variant;
  set.lookback = lookback;
  set.horizon = horizon;
  set.norm_stats = stats;
  const auto features = variant_features(variant);
  const std::size_t n = starts.size();
  const std::size_t dim = features.size();
  set.inputs = {n, lookback, dim, std::vector<double>(n * lookback * dim)};
  set.targets.resize(n);
  set.last_power.resize(n);
  set.window_start = starts;
  set.target_timestamp.resize(n);
  auto scaled = [&](double v, Feature f) {
    double z = normalize(v, stats.at(f));
    if (z < 0.0 || z > 1.0) {
      ++set.clamped_count;
      z = std::clamp(z, 0.0, 1.0);
    }
    return z;
  };
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t start = starts[s];
    for (std::size_t t = 0; t < lookback; ++t)
      for (std::size_t d = 0; d < dim; ++d)
        set.inputs.values[(s * lookback + t) * dim + d] =
            scaled(feature_value(series.records[start + t], features[d]), features[d]);
    const auto& target_rec = series.records[start + lookback + horizon - 1];
    set.targets[s] = scaled(target_rec.power, Feature::power);
    set.target_timestamp[s] = target_rec.timestamp;
    set.last_power[s] = std::clamp(
        normalize(series.records[start + lookback - 1].power, stats.at(Feature::power)), 0.0, 1.0);
  }
  set.split.test.resize(n);
  std::iota(set.split.test.begin(), set.split.test.end(), std::size_t{0});
  return set;
}

// ---------------------------------------------------------------------------
// Correlation analysis

struct CorrelationMatrix {
  std::vector<Feature> features;
  // nullopt marks an undefined coefficient (zero-variance feature).
  std::vector<std::vector<std::optional<double>>> r;
  std::vector<Feature> flagged;
};

inline CorrelationMatrix correlation_matrix(const ScadaSeries& series) {
  if (series.size() < 2) throw Error(ErrorKind::insufficient_data, "correlation needs >= 2 records");
  CorrelationMatrix m;
  m.features.assign(kAllFeatures.begin(), kAllFeatures.end());
  const std::size_t k = m.features.size();
  const double n = static_cast<double>(series.size());
  std::vector<std::vector<double>> centered(k);
  std::vector<double> norm(k);
  for (std::size_t a = 0; a < k; ++a) {
    centered[a] = series.column(m.features[a]);
    const double mean = std::accumulate(centered[a].begin(), centered[a].end(), 0.0) / n;
    double ss = 0.0;
    for (double& v : centered[a]) {
      v -= mean;
      ss += v * v;
    }
    norm[a] = std::sqrt(ss);
    if (!(norm[a] > 0.0)) m.flagged.push_back(m.features[a]);
  }
  m.r.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      if (!(norm[a] > 0.0) || !(norm[b] > 0.0)) continue;
      if (a == b) {
        m.r[a][b] = 1.0;
        continue;
      }
      double dot = 0.0;
      for (std::size_t i = 0; i < centered[a].size(); ++i) dot += centered[a][i] * centered[b][i];
      const double r = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
      m.r[a][b] = r;
      m.r[b][a] = r;
    }
  }
  return m;
}

}  // namespace windcast
