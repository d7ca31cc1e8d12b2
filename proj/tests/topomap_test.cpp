#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "eegcaps/topomap.hpp"
#include "test_util.hpp"

using namespace eegcaps;
using testutil::code_of;

namespace {

constexpr double kPi = std::numbers::pi;

ElectrodeLayout layout_of(std::initializer_list<Vec3> points) {
  ElectrodeLayout l;
  int k = 0;
  for (const auto& p : points) l.entries.push_back({"E" + std::to_string(k++), p});
  return l;
}

// Plain IDW, p = 2, exact hit returns the electrode value.
double idw_oracle(const std::vector<Point2>& pts, const std::vector<double>& v, double qx, double qy) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = std::hypot(qx - pts[i].x, qy - pts[i].y);
    if (d == 0.0) return v[i];
    num += v[i] / (d * d);
    den += 1.0 / (d * d);
  }
  return num / den;
}

BandPowerVector random_features(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  BandPowerVector f;
  for (auto& v : f.values) v = u(rng);
  return f;
}

// ---------------------------------------------------------------- projection

TEST(Projection, VertexMapsToOrigin) {
  const auto p = project_aep(layout_of({{0, 0, 1}}));
  EXPECT_NEAR(p.points[0].x, 0.0, 1e-12);
  EXPECT_NEAR(p.points[0].y, 0.0, 1e-12);
}

TEST(Projection, EquatorMapsToRadiusHalfPi) {
  const auto p = project_aep(layout_of({{1, 0, 0}, {0, 1, 0}}));
  EXPECT_NEAR(p.points[0].x, kPi / 2, 1e-12);
  EXPECT_NEAR(p.points[0].y, 0.0, 1e-12);
  EXPECT_NEAR(p.points[1].x, 0.0, 1e-12);
  EXPECT_NEAR(p.points[1].y, kPi / 2, 1e-12);
}

TEST(Projection, SouthPoleIsRejected) {
  EXPECT_EQ(code_of([] { project_aep(layout_of({{0, 0, -1}})); }), ErrorCode::SouthPoleSingularity);
}

TEST(Projection, RadiusEqualsAngleFromVertexAndAzimuthIsPreserved) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> theta(0.0, 0.95 * kPi), phi(-kPi, kPi);
  for (int trial = 0; trial < 500; ++trial) {
    const double t = theta(rng), f = phi(rng);
    const Vec3 v{std::sin(t) * std::cos(f), std::sin(t) * std::sin(f), std::cos(t)};
    const auto p = project_aep(layout_of({v})).points[0];
    EXPECT_NEAR(std::hypot(p.x, p.y), t, 1e-9);
    if (t > 1e-6) {
      // compare as unit vectors to avoid the +-pi wrap
      EXPECT_NEAR(p.x / t, std::cos(f), 1e-9);
      EXPECT_NEAR(p.y / t, std::sin(f), 1e-9);
    }
  }
}

TEST(Projection, DefaultLayoutIsInjective) {
  const auto p = project_aep(default_layout());
  ASSERT_EQ(p.points.size(), kNumChannels);
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    for (std::size_t j = i + 1; j < p.points.size(); ++j) {
      EXPECT_GT(std::hypot(p.points[i].x - p.points[j].x, p.points[i].y - p.points[j].y), 0.05)
          << default_layout().entries[i].label << " vs " << default_layout().entries[j].label;
    }
  }
}

// -------------------------------------------------------------------- layout

TEST(Layout, DefaultIsValidAndOrdered) {
  const auto& l = default_layout();
  EXPECT_NO_THROW(validate_layout(l));
  ASSERT_EQ(l.size(), 30u);
  EXPECT_EQ(l.entries[0].label, "FP1");
  EXPECT_EQ(l.entries[9].label, "Cz");
  EXPECT_EQ(l.entries[29].label, "O2");
  EXPECT_EQ(l.find("cz"), 9u);
  EXPECT_EQ(l.find("T"), 30u);
  // nose +y, left hemisphere -x
  EXPECT_GT(l.entries[l.find("Fz")].position.y, 0.0);
  EXPECT_LT(l.entries[l.find("C3")].position.x, 0.0);
  EXPECT_GT(l.entries[l.find("C4")].position.x, 0.0);
}

TEST(Layout, ShippedFileMatchesDefault) {
  const auto l = read_layout(std::filesystem::path(EEGCAPS_DATA_DIR) / "electrodes_30.txt");
  ASSERT_EQ(l.size(), default_layout().size());
  for (std::size_t i = 0; i < l.size(); ++i) {
    EXPECT_EQ(l.entries[i].label, default_layout().entries[i].label);
    EXPECT_NEAR(l.entries[i].position.x, default_layout().entries[i].position.x, 1e-12);
    EXPECT_NEAR(l.entries[i].position.y, default_layout().entries[i].position.y, 1e-12);
    EXPECT_NEAR(l.entries[i].position.z, default_layout().entries[i].position.z, 1e-12);
  }
}

TEST(Layout, RejectsBadLayouts) {
  auto l = default_layout();
  l.entries[3].position.z += 0.1;
  EXPECT_EQ(code_of([&] { validate_layout(l); }), ErrorCode::InvalidLayout);
  l = default_layout();
  l.entries[3].label = "fp1";
  EXPECT_EQ(code_of([&] { validate_layout(l); }), ErrorCode::InvalidLayout);
  l = default_layout();
  l.entries.pop_back();
  EXPECT_EQ(code_of([&] { validate_layout(l); }), ErrorCode::InvalidLayout);
}

TEST(Layout, ConformReordersChannels) {
  RawRecording rec;
  rec.subject_id = "X";
  rec.sample_rate_hz = 200.0;
  rec.samples = Matrix(kNumChannels, 4);
  rec.eye_state_track.assign(4, EyeState::Open);
  std::vector<std::size_t> perm(kNumChannels);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t j = 0; j < kNumChannels; ++j) {
    rec.channel_labels.push_back(default_layout().entries[perm[j]].label);
    for (std::size_t t = 0; t < 4; ++t) rec.samples(j, t) = static_cast<double>(perm[j] * 10 + t);
  }
  const auto out = conform_to_layout(rec, default_layout());
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    EXPECT_EQ(out.channel_labels[i], default_layout().entries[i].label);
    EXPECT_EQ(out.samples(i, 2), static_cast<double>(i * 10 + 2));
  }
  rec.channel_labels[5] = "T";
  EXPECT_EQ(code_of([&] { conform_to_layout(rec, default_layout()); }), ErrorCode::InvalidRecording);
}

// ---------------------------------------------------------------------- grid

TEST(Grid, CoversProjectedPointsWithMargin) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  ASSERT_EQ(g.x_coords.size(), 32u);
  ASSERT_EQ(g.y_coords.size(), 32u);
  double r = 0.0;
  for (const auto& q : p.points) r = std::max(r, std::hypot(q.x, q.y));
  EXPECT_NEAR(g.x_coords.front(), -1.05 * r, 1e-12);
  EXPECT_NEAR(g.x_coords.back(), 1.05 * r, 1e-12);
  for (std::size_t k = 0; k < 32; ++k) {
    EXPECT_NEAR(g.x_coords[k], -g.x_coords[31 - k], 1e-12);
    if (k) EXPECT_GT(g.x_coords[k], g.x_coords[k - 1]);
  }
  for (const auto& q : p.points) {
    EXPECT_GE(q.x, g.x_coords.front());
    EXPECT_LE(q.x, g.x_coords.back());
  }
}

// ------------------------------------------------------------- interpolation

TEST(Interpolation, MatchesIdwOracle) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 7.0);
  std::vector<double> v(kNumChannels);
  for (auto& x : v) x = u(rng);
  const auto m = interpolate_scatter(p, v, g);
  for (std::size_t row = 0; row < 32; ++row) {
    for (std::size_t col = 0; col < 32; ++col) {
      EXPECT_NEAR(m(row, col), idw_oracle(p.points, v, g.x_coords[col], g.y_coords[row]), 1e-12);
    }
  }
}

TEST(Interpolation, ExactAtElectrodes) {
  const auto p = project_aep(default_layout());
  std::vector<double> v(kNumChannels);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) * 0.5 - 3.0;
  GridSpec at_points;
  // one query row per electrode: a 1 x 1 grid at each electrode
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    at_points.x_coords = {p.points[i].x};
    at_points.y_coords = {p.points[i].y};
    EXPECT_EQ(interpolate_scatter(p, v, at_points)(0, 0), v[i]);
  }
}

TEST(Interpolation, ConstantFieldStaysConstant) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  const std::vector<double> v(kNumChannels, 4.25);
  const auto m = interpolate_scatter(p, v, g);
  for (double x : m.data()) EXPECT_EQ(x, 4.25);
}

TEST(Interpolation, StaysWithinValueRange) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(kNumChannels);
    for (auto& x : v) x = u(rng);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    for (double x : interpolate_scatter(p, v, g).data()) {
      EXPECT_GE(x, *lo);
      EXPECT_LE(x, *hi);
    }
  }
}

TEST(Interpolation, InvariantToElectrodePermutation) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(kNumChannels);
  for (auto& x : v) x = u(rng);
  std::vector<std::size_t> perm(kNumChannels);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  ProjectedLayout pp;
  std::vector<double> vp;
  for (std::size_t k : perm) {
    pp.points.push_back(p.points[k]);
    vp.push_back(v[k]);
  }
  const auto a = interpolate_scatter(p, v, g);
  const auto b = interpolate_scatter(pp, vp, g);
  for (std::size_t k = 0; k < a.data().size(); ++k) EXPECT_NEAR(a.data()[k], b.data()[k], 1e-12);
}

TEST(Interpolation, ShapeMismatch) {
  const auto p = project_aep(default_layout());
  const std::vector<double> v(5, 1.0);
  EXPECT_EQ(code_of([&] { interpolate_scatter(p, v, build_grid(p)); }), ErrorCode::ShapeMismatch);
}

// -------------------------------------------------------------------- images

TEST(AssembleImage, ShapeAndChannelOrder) {
  EXPECT_EQ(image_channel_index(Band::Theta, EyeState::Open), 0u);
  EXPECT_EQ(image_channel_index(Band::Gamma, EyeState::Open), 3u);
  EXPECT_EQ(image_channel_index(Band::Theta, EyeState::Closed), 4u);
  EXPECT_EQ(image_channel_index(Band::Gamma, EyeState::Closed), 7u);

  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  BandPowerVector f;
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    for (Band b : kAllBands) {
      for (EyeState s : {EyeState::Open, EyeState::Closed}) {
        f.values[BandPowerVector::offset(ch, b, s)] = static_cast<double>(image_channel_index(b, s) + 1);
      }
    }
  }
  const auto img = assemble_image(f, p, g);
  EXPECT_EQ(img.channels, 8u);
  EXPECT_EQ(img.height, 32u);
  EXPECT_EQ(img.width, 32u);
  EXPECT_EQ(img.data.size(), 8u * 32u * 32u);
  for (std::size_t c = 0; c < 8; ++c) {
    for (std::size_t y = 0; y < 32; y += 7) {
      for (std::size_t x = 0; x < 32; x += 5) EXPECT_EQ(img.at(c, y, x), static_cast<double>(c + 1));
    }
  }
}

TEST(AssembleImage, PlanesMatchScatterInterpolation) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  const auto f = random_features(17);
  const auto img = assemble_image(f, p, g);
  for (std::size_t c = 0; c < 8; ++c) {
    const auto [band, state] = image_channel(c);
    std::vector<double> slice;
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) slice.push_back(f.at(ch, band, state));
    for (std::size_t y = 0; y < 32; y += 3) {
      for (std::size_t x = 0; x < 32; x += 3) {
        EXPECT_NEAR(img.at(c, y, x), idw_oracle(p.points, slice, g.x_coords[x], g.y_coords[y]), 1e-12);
      }
    }
  }
}

TEST(AssembleImage, LogPowerOption) {
  const auto p = project_aep(default_layout());
  const auto g = build_grid(p);
  BandPowerVector f;
  f.values.fill(100.0);
  const auto img = assemble_image(f, p, g, {.log_power = true});
  for (double v : img.data) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(AssembleImage, ConsistentUnderLayoutPermutation) {
  // Permuting layout entries and feature channels together leaves the image unchanged.
  const auto f = random_features(99);
  const auto& base = default_layout();
  std::vector<std::size_t> perm(kNumChannels);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  ElectrodeLayout permuted;
  BandPowerVector fp;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    permuted.entries.push_back(base.entries[perm[i]]);
    for (Band b : kAllBands) {
      for (EyeState s : {EyeState::Open, EyeState::Closed}) {
        fp.values[BandPowerVector::offset(i, b, s)] = f.at(perm[i], b, s);
      }
    }
  }
  const auto pa = project_aep(base), pb = project_aep(permuted);
  const auto a = assemble_image(f, pa, build_grid(pa));
  const auto b = assemble_image(fp, pb, build_grid(pb));
  for (std::size_t k = 0; k < a.data.size(); ++k) EXPECT_NEAR(a.data[k], b.data[k], 1e-12);
}

TEST(BandSubset, KeepsSelectedPlanesInOrder) {
  const auto p = project_aep(default_layout());
  const auto img = assemble_image(random_features(3), p, build_grid(p));
  const std::vector<FeatureImage> all{img};
  const std::array<Band, 1> gamma{Band::Gamma};
  const auto sub = band_subset(all, gamma);
  ASSERT_EQ(sub.size(), 1u);
  EXPECT_EQ(sub[0].channels, 2u);
  for (std::size_t k = 0; k < img.plane_size(); ++k) {
    EXPECT_EQ(sub[0].data[k], img.data[3 * img.plane_size() + k]);
    EXPECT_EQ(sub[0].data[img.plane_size() + k], img.data[7 * img.plane_size() + k]);
  }
  const std::array<Band, 2> two{Band::Beta, Band::Theta};
  const auto sub2 = band_subset(all, two);
  EXPECT_EQ(sub2[0].channels, 4u);
  // original order: theta-open, beta-open, theta-closed, beta-closed
  EXPECT_EQ(sub2[0].data[img.plane_size()], img.data[2 * img.plane_size()]);
  EXPECT_EQ(code_of([&] { band_subset(all, std::span<const Band>{}); }), ErrorCode::EmptyBandSet);
}

// ---------------------------------------------------------------- normalizer

std::vector<FeatureImage> random_images(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FeatureImage> out(n);
  for (auto& img : out) {
    img.data.resize(img.channels * img.plane_size());
    for (std::size_t c = 0; c < img.channels; ++c) {
      for (std::size_t k = 0; k < img.plane_size(); ++k) {
        img.data[c * img.plane_size() + k] = 3.0 * static_cast<double>(c) + (c + 1) * noise(rng);
      }
    }
  }
  return out;
}

TEST(Normalizer, TrainingSetHasZeroMeanUnitStd) {
  const auto imgs = random_images(12, 1);
  const auto norm = fit_normalizer(imgs);
  std::vector<double> sum(8, 0.0), sq(8, 0.0);
  for (const auto& img : imgs) {
    const auto z = apply_normalizer(img, norm);
    for (std::size_t c = 0; c < 8; ++c) {
      for (std::size_t k = 0; k < z.plane_size(); ++k) {
        sum[c] += z.data[c * z.plane_size() + k];
        sq[c] += z.data[c * z.plane_size() + k] * z.data[c * z.plane_size() + k];
      }
    }
  }
  const double n = 12.0 * 1024.0;
  for (std::size_t c = 0; c < 8; ++c) {
    EXPECT_NEAR(sum[c] / n, 0.0, 1e-9);
    EXPECT_NEAR(sq[c] / n, 1.0, 1e-9);
  }
}

TEST(Normalizer, RoundTrip) {
  const auto imgs = random_images(4, 2);
  const auto norm = fit_normalizer(imgs);
  const auto test = random_images(1, 3)[0];
  const auto back = invert_normalizer(apply_normalizer(test, norm), norm);
  for (std::size_t k = 0; k < test.data.size(); ++k) EXPECT_NEAR(back.data[k], test.data[k], 1e-9);
}

TEST(Normalizer, ConstantChannelStaysFinite) {
  auto imgs = random_images(3, 4);
  for (auto& img : imgs) std::fill(img.data.begin(), img.data.begin() + 1024, 5.0);
  const auto norm = fit_normalizer(imgs);
  EXPECT_EQ(norm.stddev[0], kStdFloor);
  const auto z = apply_normalizer(imgs[0], norm);
  for (double v : z.data) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(z.data[0], 0.0);
}

TEST(Normalizer, Errors) {
  EXPECT_EQ(code_of([] { fit_normalizer(std::span<const FeatureImage>{}); }), ErrorCode::EmptyTrainingSet);
  const auto norm = fit_normalizer(random_images(2, 5));
  FeatureImage two;
  two.channels = 2;
  two.data.assign(2 * 1024, 0.0);
  EXPECT_EQ(code_of([&] { apply_normalizer(two, norm); }), ErrorCode::ShapeMismatch);
}

}  // namespace
