#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "windcast/scada.hpp"
#include "windcast/synth.hpp"

using namespace windcast;

namespace {

const char* kHeader =
    "timestamp,wind_speed,wind_direction,power,ambient_temp,nacelle_temp,hydraulic_oil_temp,"
    "hydraulic_oil_pressure\n";

ScadaSeries ramp_series(std::size_t n, std::int64_t t0 = 1'600'000'000) {
  std::vector<ScadaRecord> recs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = recs[i];
    r.timestamp = t0 + static_cast<std::int64_t>(i) * 600;
    r.wind_speed = 3.0 + std::fmod(static_cast<double>(i) * 0.37, 9.0);
    r.wind_direction = std::fmod(static_cast<double>(i) * 11.0, 360.0);
    r.power = 100.0 * r.wind_speed + 5.0 * std::sin(static_cast<double>(i));
    r.ambient_temp = 10.0 + std::sin(0.1 * static_cast<double>(i));
    r.nacelle_temp = 20.0 + std::cos(0.1 * static_cast<double>(i));
    r.hydraulic_oil_temp = 40.0 + static_cast<double>(i % 7);
    r.hydraulic_oil_pressure = 150.0 + static_cast<double>(i % 5);
  }
  return ScadaSeries(std::move(recs), 600);
}

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(ParseCsv, ThreeWellFormedRows) {
  std::istringstream in(std::string(kHeader) +
                        "2020-01-01 00:00:00,5.0,180,300,10,20,40,150\n"
                        "2020-01-01 00:10:00,6.0,190,400,10,20,40,150\n"
                        "2020-01-01 00:20:00,7.0,200,500,10,20,40,150\n");
  const auto s = parse_csv(in);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.skipped_rows, 0u);
  EXPECT_EQ(s.cadence, 600);
  EXPECT_DOUBLE_EQ(s.records[1].wind_speed, 6.0);
  EXPECT_EQ(s.records[2].timestamp - s.records[0].timestamp, 1200);
}

TEST(ParseCsv, MalformedCellSkippedAndCounted) {
  std::istringstream in(std::string(kHeader) +
                        "2020-01-01 00:00:00,5.0,180,300,10,20,40,150\n"
                        "2020-01-01 00:10:00,abc,190,400,10,20,40,150\n"
                        "2020-01-01 00:20:00,7.0,200,500,10,20,40,150\n");
  const auto s = parse_csv(in);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.skipped_rows, 1u);
}

TEST(ParseCsv, UnsortedRowsAreResorted) {
  std::vector<std::int64_t> stamps = {1800, 0, 3000, 600, 2400, 1200};
  std::string text = kHeader;
  for (auto t : stamps) text += std::to_string(t) + ",5,0,1,1,1,1,1\n";
  std::istringstream in(text);
  const auto s = parse_csv(in);
  EXPECT_TRUE(s.resorted);
  std::vector<std::int64_t> expected = stamps;
  std::sort(expected.begin(), expected.end());
  ASSERT_EQ(s.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(s.records[i].timestamp, expected[i]);
}

TEST(ParseCsv, MissingColumnIsSchemaError) {
  std::istringstream in("timestamp,wind_speed,power\n0,5,100\n");
  try {
    parse_csv(in);
    FAIL() << "expected schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
}

TEST(ParseCsv, NoValidRowsIsEmptyDataError) {
  std::istringstream in(std::string(kHeader) + "bad,row,,,,,,\n");
  try {
    parse_csv(in);
    FAIL() << "expected empty-data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_data);
  }
}

TEST(ParseCsv, OptionalColumnsMayBeAbsent) {
  std::istringstream in("timestamp,wind_speed\n0,5\n600,6\n");
  const std::vector<std::string> optional = {"wind_direction", "power", "ambient_temp", "nacelle_temp",
                                             "hydraulic_oil_temp", "hydraulic_oil_pressure"};
  const auto s = parse_csv(in, {}, 600, optional);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.absent_fields.size(), optional.size());
  EXPECT_DOUBLE_EQ(s.records[1].power, 0.0);
}

TEST(ParseCsv, GapsRecordedNotInterpolated) {
  std::string text = kHeader;
  for (std::int64_t t : {0, 600, 1200, 3600, 4200}) text += std::to_string(t) + ",5,0,1,1,1,1,1\n";
  std::istringstream in(text);
  const auto s = parse_csv(in);
  EXPECT_EQ(s.size(), 5u);
  ASSERT_EQ(s.gaps().size(), 1u);
  EXPECT_EQ(s.gaps()[0].after, 2u);
  EXPECT_EQ(s.gaps()[0].missing_seconds, 1800);
}

TEST(ParseCsv, WriteThenReadRoundTrips) {
  const auto s = ramp_series(50);
  std::ostringstream out;
  write_csv(out, s);
  std::istringstream in(out.str());
  const auto back = parse_csv(in);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.records[i].timestamp, s.records[i].timestamp);
    for (Feature f : kAllFeatures) EXPECT_EQ(feature_value(back.records[i], f), feature_value(s.records[i], f));
  }
}

TEST(Normalize, BoundsAndMidpoint) {
  const FeatureRange r{0.0, 10.0};
  EXPECT_DOUBLE_EQ(normalize(0.0, r), 0.0);
  EXPECT_DOUBLE_EQ(normalize(10.0, r), 1.0);
  EXPECT_DOUBLE_EQ(normalize(5.0, r), 0.5);
}

TEST(Normalize, InverseRoundTrip) {
  const FeatureRange r{-37.5, 2012.25};
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(-37.5 + 10.3 * i);
  const auto back = inverse_normalize(normalize(v, r), r);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-12 * std::max(1.0, std::abs(v[i])));
}

TEST(Normalize, DegenerateRangeRejected) {
  const std::vector<double> v = {1.0, 2.0};
  try {
    normalize(v, FeatureRange{3.0, 3.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_feature);
  }
}

TEST(BuildSupervised, SampleCounts) {
  const auto s = ramp_series(100);
  EXPECT_EQ(build_supervised(s, ModelVariant::M1, 6, 1, 1).size(), 94u);
  EXPECT_EQ(build_supervised(s, ModelVariant::M1, 6, 6, 1).size(), 89u);
}

TEST(BuildSupervised, SplitIsDeterministicPartition) {
  const auto s = ramp_series(1000);
  const auto a = build_supervised(s, ModelVariant::M4, 6, 1, 42);
  const auto b = build_supervised(s, ModelVariant::M4, 6, 1, 42);
  EXPECT_EQ(a.split.train, b.split.train);
  EXPECT_EQ(a.split.validation, b.split.validation);
  EXPECT_EQ(a.split.test, b.split.test);

  const std::size_t n = a.size();
  EXPECT_EQ(a.split.validation.size(), n / 10);
  EXPECT_EQ(a.split.test.size(), n / 10);
  EXPECT_EQ(a.split.train.size(), n - 2 * (n / 10));
  std::set<std::size_t> all;
  for (const auto* part : {&a.split.train, &a.split.validation, &a.split.test})
    for (std::size_t i : *part) EXPECT_TRUE(all.insert(i).second) << "index " << i << " repeated";
  EXPECT_EQ(all.size(), n);
  EXPECT_EQ(*all.rbegin(), n - 1);

  const auto c = build_supervised(s, ModelVariant::M4, 6, 1, 43);
  EXPECT_NE(a.split.test, c.split.test);
}

TEST(BuildSupervised, WindowLayoutAndTarget) {
  const auto s = ramp_series(120);
  const std::size_t L = 6, H = 3;
  const auto set = build_supervised(s, ModelVariant::M3, L, H, 7);
  const auto& ws = set.norm_stats.at(Feature::wind_speed);
  const auto& pw = set.norm_stats.at(Feature::power);
  for (std::size_t k : set.split.train) {
    const std::size_t start = set.window_start[k];
    for (std::size_t t = 0; t < L; ++t) {
      const double* x = &set.inputs.values[(k * L + t) * 2];
      EXPECT_DOUBLE_EQ(x[0], normalize(s.records[start + t].wind_speed, ws));
      EXPECT_DOUBLE_EQ(x[1], normalize(s.records[start + t].power, pw));
    }
    EXPECT_DOUBLE_EQ(set.targets[k], normalize(s.records[start + L + H - 1].power, pw));
    EXPECT_EQ(set.target_timestamp[k], s.records[start + L + H - 1].timestamp);
  }
}

TEST(BuildSupervised, StatsComeFromTrainingWindowsOnly) {
  const auto s = ramp_series(400);
  const std::size_t L = 6, H = 1;
  const auto set = build_supervised(s, ModelVariant::M1, L, H, 3);
  double lo = 1e300, hi = -1e300;
  for (std::size_t k : set.split.train)
    for (std::size_t t = 0; t < L; ++t) {
      lo = std::min(lo, s.records[set.window_start[k] + t].wind_speed);
      hi = std::max(hi, s.records[set.window_start[k] + t].wind_speed);
    }
  EXPECT_EQ(set.norm_stats.at(Feature::wind_speed).min, lo);
  EXPECT_EQ(set.norm_stats.at(Feature::wind_speed).max, hi);
  for (double v : set.inputs.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : set.targets) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(BuildSupervised, WindowsAcrossGapsExcluded) {
  auto s = ramp_series(60);
  for (std::size_t i = 30; i < s.records.size(); ++i) s.records[i].timestamp += 3600;
  s.index_gaps();
  const std::size_t L = 6, H = 1;
  std::size_t expected = 0;
  for (std::size_t i = 0; i + L + H <= s.size(); ++i) {
    bool ok = true;
    for (std::size_t k = i; k + 1 < i + L + H; ++k)
      ok = ok && s.records[k + 1].timestamp - s.records[k].timestamp == 600;
    expected += ok;
  }
  const auto set = build_supervised(s, ModelVariant::M1, L, H, 1);
  EXPECT_EQ(set.size(), expected);
  EXPECT_EQ(expected, 60u - 2 * (L + H - 1));
}

TEST(BuildSupervised, TooShortSeries) {
  try {
    build_supervised(ramp_series(12), ModelVariant::M1, 6, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
}

TEST(BuildSupervised, ChronologicalSplitKeepsOrder) {
  const auto set = build_supervised(ramp_series(300), ModelVariant::M1, 6, 1, 1, SplitMode::chronological);
  EXPECT_LT(set.split.train.back(), set.split.validation.front());
  EXPECT_LT(set.split.validation.back(), set.split.test.front());
}

TEST(Correlation, DiagonalAndNegation) {
  auto s = ramp_series(300);
  for (auto& r : s.records) r.nacelle_temp = -r.ambient_temp;
  const auto m = correlation_matrix(s);
  const auto idx = [&](Feature f) {
    return static_cast<std::size_t>(std::find(m.features.begin(), m.features.end(), f) - m.features.begin());
  };
  for (std::size_t a = 0; a < m.features.size(); ++a) {
    ASSERT_TRUE(m.r[a][a].has_value());
    EXPECT_EQ(*m.r[a][a], 1.0);
    for (std::size_t b = 0; b < m.features.size(); ++b) {
      ASSERT_TRUE(m.r[a][b].has_value());
      EXPECT_EQ(*m.r[a][b], *m.r[b][a]);
      EXPECT_LE(std::abs(*m.r[a][b]), 1.0);
    }
  }
  EXPECT_NEAR(*m.r[idx(Feature::ambient_temp)][idx(Feature::nacelle_temp)], -1.0, 1e-12);
}

TEST(Correlation, ZeroVarianceFlagged) {
  auto s = ramp_series(50);
  for (auto& r : s.records) r.hydraulic_oil_pressure = 150.0;
  const auto m = correlation_matrix(s);
  ASSERT_EQ(m.flagged.size(), 1u);
  EXPECT_EQ(m.flagged[0], Feature::hydraulic_oil_pressure);
  const auto k = static_cast<std::size_t>(
      std::find(m.features.begin(), m.features.end(), Feature::hydraulic_oil_pressure) - m.features.begin());
  for (std::size_t b = 0; b < m.features.size(); ++b) EXPECT_FALSE(m.r[k][b].has_value());
}

TEST(Correlation, SpeedPowerOnSyntheticMatchesOracle) {
  SynthConfig cfg;
  cfg.n_records = 5000;
  cfg.outlier_rate = 0.0;
  cfg.seed = 11;
  const auto syn = generate(TurbineSpec{}, cfg);
  const auto m = correlation_matrix(syn.series);
  const double oracle = pearson_oracle(syn.series.column(Feature::wind_speed), syn.series.column(Feature::power));
  const double r = *m.r[0][2];  // wind_speed, power
  EXPECT_EQ(m.features[0], Feature::wind_speed);
  EXPECT_EQ(m.features[2], Feature::power);
  EXPECT_NEAR(r, oracle, 1e-12);
  EXPECT_GT(r, 0.9);
}
