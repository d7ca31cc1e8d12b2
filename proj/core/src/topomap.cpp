#include <algorithm>
#include <cmath>

#include "eegcaps/error.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps {

ProjectedLayout project_aep(const ElectrodeLayout& layout) {
  ProjectedLayout out;
  out.points.reserve(layout.size());
  for (const auto& e : layout.entries) {
    const auto& p = e.position;
    if (p.z <= -1.0 + 1e-12) {
      fail(ErrorCode::SouthPoleSingularity, "electrode " + e.label + " sits at the south pole");
    }
    const double r = std::acos(std::clamp(p.z, -1.0, 1.0));
    const double phi = std::atan2(p.y, p.x);
    out.points.push_back({r * std::cos(phi), r * std::sin(phi)});
  }
  return out;
}

GridSpec build_grid(const ProjectedLayout& projected, std::size_t resolution) {
  if (resolution < 2) fail(ErrorCode::InvalidArgument, "grid resolution must be at least 2");
  double radius = 0.0;
  for (const auto& p : projected.points) radius = std::max(radius, std::hypot(p.x, p.y));
  const double half = radius * (1.0 + kGridMargin);
  const auto last = static_cast<double>(resolution - 1);

  GridSpec grid;
  grid.x_coords.resize(resolution);
  for (std::size_t k = 0; k < resolution; ++k) {
    const double t = (2.0 * static_cast<double>(k) - last) / last;
    grid.x_coords[k] = half * t;
  }
  grid.y_coords = grid.x_coords;
  return grid;
}

Matrix interpolate_scatter(const ProjectedLayout& points, std::span<const double> values,
                           const GridSpec& grid) {
  if (values.size() != points.points.size()) {
    fail(ErrorCode::ShapeMismatch, "one value per projected electrode required");
  }
  Matrix out(grid.y_coords.size(), grid.x_coords.size());
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  for (std::size_t row = 0; row < grid.y_coords.size(); ++row) {
    for (std::size_t col = 0; col < grid.x_coords.size(); ++col) {
      const double qx = grid.x_coords[col];
      const double qy = grid.y_coords[row];
      double num = 0.0;
      double den = 0.0;
      bool hit = false;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double dx = qx - points.points[i].x;
        const double dy = qy - points.points[i].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < 1e-18) {
          out(row, col) = values[i];
          hit = true;
          break;
        }
        const double w = 1.0 / d2;
        num += w * values[i];
        den += w;
      }
      if (!hit) {
        // Clamp to the value range; the weighted mean can overshoot by an ulp.
        out(row, col) = std::clamp(num / den, *lo, *hi);
      }
    }
  }
  return out;
}

FeatureImage assemble_image(const BandPowerVector& features, const ProjectedLayout& projected,
                            const GridSpec& grid, const AssembleOptions& options) {
  if (projected.points.size() != kNumChannels) {
    fail(ErrorCode::ShapeMismatch, "projected layout must hold 30 points");
  }
  FeatureImage image;
  image.channels = kImageChannels;
  image.height = grid.y_coords.size();
  image.width = grid.x_coords.size();
  image.data.assign(image.channels * image.plane_size(), 0.0);

  std::array<double, kNumChannels> slice{};
  for (std::size_t c = 0; c < kImageChannels; ++c) {
    const auto [band, state] = image_channel(c);
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      const double p = features.at(ch, band, state);
      slice[ch] = options.log_power ? std::log10(p + 1e-12) : p;
    }
    const Matrix plane = interpolate_scatter(projected, slice, grid);
    std::copy(plane.data().begin(), plane.data().end(),
              image.data.begin() + static_cast<std::ptrdiff_t>(c * image.plane_size()));
  }
  return image;
}

std::vector<FeatureImage> band_subset(const std::vector<FeatureImage>& images,
                                      std::span<const Band> bands) {
  if (bands.empty()) fail(ErrorCode::EmptyBandSet, "band subset must not be empty");
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < kImageChannels; ++c) {
    const auto [band, state] = image_channel(c);
    if (std::find(bands.begin(), bands.end(), band) != bands.end()) keep.push_back(c);
  }
  std::vector<FeatureImage> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    if (img.channels != kImageChannels) {
      fail(ErrorCode::ShapeMismatch, "band_subset expects full 8-plane images");
    }
    FeatureImage sub;
    sub.channels = keep.size();
    sub.height = img.height;
    sub.width = img.width;
    sub.subject_id = img.subject_id;
    sub.group = img.group;
    sub.epoch_index = img.epoch_index;
    sub.data.reserve(sub.channels * sub.plane_size());
    for (std::size_t c : keep) {
      const auto first = img.data.begin() + static_cast<std::ptrdiff_t>(c * img.plane_size());
      sub.data.insert(sub.data.end(), first, first + static_cast<std::ptrdiff_t>(img.plane_size()));
    }
    out.push_back(std::move(sub));
  }
  return out;
}

Normalizer fit_normalizer(std::span<const FeatureImage> train_images) {
  if (train_images.empty()) fail(ErrorCode::EmptyTrainingSet, "no training images");
  const auto& first = train_images.front();
  const std::size_t channels = first.channels;
  const std::size_t plane = first.plane_size();
  for (const auto& img : train_images) {
    if (img.channels != channels || img.plane_size() != plane) {
      fail(ErrorCode::ShapeMismatch, "training images differ in shape");
    }
  }
  const double count = static_cast<double>(plane * train_images.size());

  Normalizer norm;
  norm.mean.assign(channels, 0.0);
  norm.stddev.assign(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (const auto& img : train_images) {
      for (std::size_t k = 0; k < plane; ++k) sum += img.data[c * plane + k];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (const auto& img : train_images) {
      for (std::size_t k = 0; k < plane; ++k) {
        const double d = img.data[c * plane + k] - mean;
        sq += d * d;
      }
    }
    norm.mean[c] = mean;
    norm.stddev[c] = std::max(std::sqrt(sq / count), kStdFloor);
  }
  return norm;
}

namespace {
void check_norm(const FeatureImage& image, const Normalizer& norm) {
  if (norm.mean.size() != image.channels || norm.stddev.size() != image.channels) {
    fail(ErrorCode::ShapeMismatch, "normalizer channel count differs from image");
  }
}
}  // namespace

FeatureImage apply_normalizer(const FeatureImage& image, const Normalizer& norm) {
  check_norm(image, norm);
  FeatureImage out = image;
  const std::size_t plane = image.plane_size();
  for (std::size_t c = 0; c < image.channels; ++c) {
    for (std::size_t k = 0; k < plane; ++k) {
      double& v = out.data[c * plane + k];
      v = (v - norm.mean[c]) / norm.stddev[c];
    }
  }
  return out;
}

FeatureImage invert_normalizer(const FeatureImage& image, const Normalizer& norm) {
  check_norm(image, norm);
  FeatureImage out = image;
  const std::size_t plane = image.plane_size();
  for (std::size_t c = 0; c < image.channels; ++c) {
    for (std::size_t k = 0; k < plane; ++k) {
      double& v = out.data[c * plane + k];
      v = v * norm.stddev[c] + norm.mean[c];
    }
  }
  return out;
}

}  // namespace eegcaps
