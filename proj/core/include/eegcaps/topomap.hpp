#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eegcaps/common.hpp"
#include "eegcaps/signal.hpp"

namespace eegcaps {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Electrode {
  std::string label;
  Vec3 position;  // unit sphere; nose +y, vertex +z
};

struct ElectrodeLayout {
  std::vector<Electrode> entries;

  std::size_t size() const { return entries.size(); }
  // Index of label (case-insensitive), or size() when absent.
  std::size_t find(std::string_view label) const;
};

// Idealized spherical 10/20 positions for the 30 recorded channels, in recording
// order: FP1 FP2 F7 F3 Fz F4 F8 T3 C3 Cz C4 T4 T5 P3 Pz P4 T6 FT9 FC5 FC1 CP5 CP1
// Oz CP6 CP2 FT10 FC6 FC2 O1 O2.
const ElectrodeLayout& default_layout();

// Checks count, unit norm and label uniqueness.
void validate_layout(const ElectrodeLayout& layout);

// Text format: one `LABEL x y z` line per electrode.
ElectrodeLayout read_layout(const std::filesystem::path& path);
void write_layout(const ElectrodeLayout& layout, const std::filesystem::path& path);

// Reorders recording channels to layout order (labels matched case-insensitively).
RawRecording conform_to_layout(const RawRecording& recording, const ElectrodeLayout& layout);

struct ProjectedLayout {
  std::vector<Point2> points;
};

// Azimuthal equidistant projection centred on the vertex: planar radius is the
// great-circle angle from +z, azimuth is atan2(y, x).
ProjectedLayout project_aep(const ElectrodeLayout& layout);

struct GridSpec {
  std::vector<double> x_coords;
  std::vector<double> y_coords;
};

inline constexpr std::size_t kGridSize = 32;
inline constexpr double kGridMargin = 0.05;

// Square grid of cell centres spanning +-R(1 + margin), R the largest planar radius.
GridSpec build_grid(const ProjectedLayout& projected, std::size_t resolution = kGridSize);

// Inverse-distance weighting with power 2 (exact hit below 1e-9 distance).
// Result is row-major [y][x].
Matrix interpolate_scatter(const ProjectedLayout& points, std::span<const double> values,
                           const GridSpec& grid);

// --------------------------------------------------------------------------
// Feature images

inline constexpr std::size_t kImageChannels = kNumBands * kNumEyeStates;

struct ImageChannel {
  Band band;
  EyeState state;
};

// (Theta,Open) (Alpha,Open) (Beta,Open) (Gamma,Open) (Theta,Closed) ... (Gamma,Closed)
constexpr ImageChannel image_channel(std::size_t c) {
  return {static_cast<Band>(c % kNumBands), static_cast<EyeState>(c / kNumBands)};
}
constexpr std::size_t image_channel_index(Band band, EyeState state) {
  return static_cast<std::size_t>(state) * kNumBands + static_cast<std::size_t>(band);
}

struct FeatureImage {
  std::size_t channels = kImageChannels;
  std::size_t height = kGridSize;
  std::size_t width = kGridSize;
  std::vector<double> data;  // channel-major, then row-major
  std::string subject_id;
  Group group = Group::HC;
  std::size_t epoch_index = 0;

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
  std::size_t plane_size() const { return height * width; }
};

struct AssembleOptions {
  bool log_power = false;  // interpolate log10(power + 1e-12) instead of power
};

FeatureImage assemble_image(const BandPowerVector& features, const ProjectedLayout& projected,
                            const GridSpec& grid, const AssembleOptions& options = {});

// Keeps the (band, Open) and (band, Closed) planes for the selected bands, in
// the original channel order. Input images must carry all 8 planes.
std::vector<FeatureImage> band_subset(const std::vector<FeatureImage>& images,
                                      std::span<const Band> bands);

// --------------------------------------------------------------------------
// Per-channel z-scoring, fitted on training images only.

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

inline constexpr double kStdFloor = 1e-12;

Normalizer fit_normalizer(std::span<const FeatureImage> train_images);
FeatureImage apply_normalizer(const FeatureImage& image, const Normalizer& norm);
FeatureImage invert_normalizer(const FeatureImage& image, const Normalizer& norm);

// --------------------------------------------------------------------------
// .fimg files: little-endian, magic "FIMG1\0", u32 C/H/W/label, u32 length +
// subject id bytes, u32 epoch, then C*H*W f32 values.

std::vector<unsigned char> encode_fimg(const FeatureImage& image);
FeatureImage decode_fimg(std::span<const unsigned char> bytes);
void write_fimg(const FeatureImage& image, const std::filesystem::path& path);
FeatureImage read_fimg(const std::filesystem::path& path);
// Name used by featurize: <subject>_<epoch:05>.fimg
std::string fimg_filename(const FeatureImage& image);
// All *.fimg files in a directory, sorted by file name.
std::vector<FeatureImage> read_fimg_dir(const std::filesystem::path& dir);

}  // namespace eegcaps
