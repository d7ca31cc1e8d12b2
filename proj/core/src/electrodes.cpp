#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "eegcaps/error.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

// Equator ring (Fp1/Fp2, F7/F8, T3/T4, T5/T6, O1/O2, Oz) at 90 degrees from the
// vertex; Fz/Pz/C3/C4 at 45; F3/F4/P3/P4 at 60; FT9/FT10 at 108. FC*/CP* are
// normalized means of the four surrounding sites.
ElectrodeLayout make_default_layout() {
  return ElectrodeLayout{{
      {"FP1", {-0.30901699437494734, 0.95105651629515364, 6.123233995736766e-17}},
      {"FP2", {0.30901699437494745, 0.95105651629515353, 6.123233995736766e-17}},
      {"F7", {-0.80901699437494734, 0.58778525229247325, 6.123233995736766e-17}},
      {"F3", {-0.54500744576871618, 0.67302814507021913, 0.50000000000000011}},
      {"Fz", {4.3297802811774658e-17, 0.70710678118654746, 0.70710678118654757}},
      {"F4", {0.54500744576871629, 0.67302814507021902, 0.50000000000000011}},
      {"F8", {0.80901699437494745, 0.58778525229247314, 6.123233995736766e-17}},
      {"T3", {-1, 1.2246467991473532e-16, 6.123233995736766e-17}},
      {"C3", {-0.70710678118654746, 8.6595605623549316e-17, 0.70710678118654757}},
      {"Cz", {0, 0, 1}},
      {"C4", {0.70710678118654746, 0, 0.70710678118654757}},
      {"T4", {1, 0, 6.123233995736766e-17}},
      {"T5", {-0.80901699437494756, -0.58778525229247303, 6.123233995736766e-17}},
      {"P3", {-0.54500744576871663, -0.67302814507021869, 0.50000000000000011}},
      {"Pz", {-1.2989340843532398e-16, -0.70710678118654746, 0.70710678118654757}},
      {"P4", {0.54500744576871629, -0.67302814507021891, 0.50000000000000011}},
      {"T6", {0.80901699437494734, -0.58778525229247336, 6.123233995736766e-17}},
      {"FT9", {-0.90450849718747373, 0.29389262614623668, -0.30901699437494734}},
      {"FC5", {-0.86869772169305448, 0.35779770502393043, 0.34255666772799043}},
      {"FC1", {-0.36197944686124789, 0.39898953821100769, 0.84248336983479499}},
      {"CP5", {-0.86869772169305459, -0.35779770502393016, 0.34255666772799043}},
      {"CP1", {-0.36197944686124806, -0.39898953821100758, 0.84248336983479499}},
      {"Oz", {-1.8369701987210297e-16, -1, 6.123233995736766e-17}},
      {"CP6", {0.86869772169305448, -0.35779770502393038, 0.34255666772799043}},
      {"CP2", {0.36197944686124789, -0.39898953821100763, 0.84248336983479499}},
      {"FT10", {0.90450849718747373, 0.29389262614623657, -0.30901699437494734}},
      {"FC6", {0.86869772169305448, 0.35779770502393038, 0.34255666772799043}},
      {"FC2", {0.36197944686124789, 0.39898953821100763, 0.84248336983479499}},
      {"O1", {-0.30901699437494756, -0.95105651629515353, 6.123233995736766e-17}},
      {"O2", {0.30901699437494723, -0.95105651629515364, 6.123233995736766e-17}},
  }};
}

}  // namespace

std::size_t ElectrodeLayout::find(std::string_view label) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (iequals(entries[i].label, label)) return i;
  }
  return entries.size();
}

const ElectrodeLayout& default_layout() {
  static const ElectrodeLayout layout = make_default_layout();
  return layout;
}

void validate_layout(const ElectrodeLayout& layout) {
  if (layout.size() != kNumChannels) {
    fail(ErrorCode::InvalidLayout, "layout must hold 30 electrodes");
  }
  std::set<std::string> seen;
  for (const auto& e : layout.entries) {
    const auto& p = e.position;
    const double norm = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    if (!(std::abs(norm - 1.0) <= 1e-9)) {
      fail(ErrorCode::InvalidLayout, "electrode " + e.label + " is not on the unit sphere");
    }
    std::string key(e.label);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (!seen.insert(key).second) fail(ErrorCode::InvalidLayout, "duplicate label " + e.label);
  }
}

ElectrodeLayout read_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  ElectrodeLayout layout;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Electrode e;
    if (!(ss >> e.label >> e.position.x >> e.position.y >> e.position.z)) {
      fail(ErrorCode::ParseError, path.string() + ": malformed line '" + line + "'");
    }
    layout.entries.push_back(std::move(e));
  }
  validate_layout(layout);
  return layout;
}

void write_layout(const ElectrodeLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const auto& e : layout.entries) {
    out << e.label << ' ' << e.position.x << ' ' << e.position.y << ' ' << e.position.z << '\n';
  }
}

RawRecording conform_to_layout(const RawRecording& recording, const ElectrodeLayout& layout) {
  validate_recording(recording);
  RawRecording out = recording;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    std::size_t src = recording.channel_labels.size();
    for (std::size_t j = 0; j < recording.channel_labels.size(); ++j) {
      if (iequals(recording.channel_labels[j], layout.entries[i].label)) src = j;
    }
    if (src == recording.channel_labels.size()) {
      fail(ErrorCode::InvalidRecording,
           recording.subject_id + ": channel " + layout.entries[i].label + " missing");
    }
    out.channel_labels[i] = layout.entries[i].label;
    const auto row = recording.samples.row(src);
    std::copy(row.begin(), row.end(), out.samples.row(i).begin());
  }
  return out;
}

}  // namespace eegcaps
