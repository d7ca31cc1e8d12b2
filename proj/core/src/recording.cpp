#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eegcaps/error.hpp"
#include "eegcaps/signal.hpp"

namespace eegcaps {

std::string_view to_string(Group group) { return group == Group::PD ? "PD" : "HC"; }

std::string_view to_string(Band band) {
  switch (band) {
    case Band::Theta: return "theta";
    case Band::Alpha: return "alpha";
    case Band::Beta: return "beta";
    case Band::Gamma: return "gamma";
  }
  return "?";
}

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

Group parse_group(std::string_view text) {
  const auto t = lower(text);
  if (t == "pd") return Group::PD;
  if (t == "hc") return Group::HC;
  fail(ErrorCode::ParseError, "unknown group '" + std::string(text) + "'");
}

Band parse_band(std::string_view text) {
  const auto t = lower(text);
  for (Band b : kAllBands) {
    if (t == to_string(b)) return b;
  }
  fail(ErrorCode::ParseError, "unknown band '" + std::string(text) + "'");
}

std::vector<Band> parse_band_list(std::string_view text) {
  std::array<bool, kNumBands> seen{};
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos
                                                                         : comma - start);
    if (!piece.empty()) seen[static_cast<std::size_t>(parse_band(piece))] = true;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::vector<Band> out;
  for (Band b : kAllBands) {
    if (seen[static_cast<std::size_t>(b)]) out.push_back(b);
  }
  if (out.empty()) fail(ErrorCode::EmptyBandSet, "no bands selected");
  return out;
}

void validate_recording(const RawRecording& rec) {
  if (rec.channel_labels.size() != kNumChannels || rec.num_channels() != kNumChannels) {
    fail(ErrorCode::InvalidRecording, "expected 30 channels in " + rec.subject_id);
  }
  if (!(rec.sample_rate_hz > 2.0 * 45.0)) {
    fail(ErrorCode::InvalidRecording, "sample rate must exceed 90 Hz");
  }
  if (rec.eye_state_track.size() != rec.num_samples()) {
    fail(ErrorCode::InvalidRecording, "eye-state track length differs from sample count");
  }
  for (double v : rec.samples.data()) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidRecording, "non-finite sample");
  }
}

std::vector<EpochPair> segment_epochs(const RawRecording& recording) {
  const std::size_t n = recording.num_samples();
  const auto window = static_cast<std::size_t>(std::llround(kEpochSeconds * recording.sample_rate_hz));
  std::vector<std::size_t> open_starts;
  std::vector<std::size_t> closed_starts;

  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || recording.eye_state_track[i] != recording.eye_state_track[run_start]) {
      auto& starts =
          recording.eye_state_track[run_start] == EyeState::Open ? open_starts : closed_starts;
      for (std::size_t s = run_start; s + window <= i; s += window) starts.push_back(s);
      run_start = i;
    }
  }
  if (open_starts.empty() || closed_starts.empty()) {
    fail(ErrorCode::InsufficientData,
         "need at least one full 5 s window per eye state in " + recording.subject_id);
  }

  const std::size_t count = std::min(open_starts.size(), closed_starts.size());
  const std::size_t channels = recording.num_channels();
  std::vector<EpochPair> pairs;
  pairs.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    EpochPair p;
    p.open_segment = Matrix(channels, window);
    p.closed_segment = Matrix(channels, window);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const auto row = recording.samples.row(ch);
      std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(open_starts[e]), window,
                  p.open_segment.row(ch).begin());
      std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(closed_starts[e]), window,
                  p.closed_segment.row(ch).begin());
    }
    p.subject_id = recording.subject_id;
    p.group = recording.group;
    p.index = e;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

RawRecording read_recording_csv(const std::filesystem::path& path, std::string subject_id,
                                Group group, double sample_rate_hz) {
  const std::string text = read_file(path);
  std::string_view rest(text);

  auto next_line = [&rest]() -> std::string_view {
    const auto nl = rest.find('\n');
    auto line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    return trim(line);
  };

  RawRecording rec;
  rec.subject_id = std::move(subject_id);
  rec.group = group;
  rec.sample_rate_hz = sample_rate_hz;

  {
    std::string_view header = next_line();
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = header.find(',', start);
      cols.emplace_back(trim(header.substr(start, comma == header.npos ? header.npos
                                                                      : comma - start)));
      if (comma == header.npos) break;
      start = comma + 1;
    }
    if (cols.size() != kNumChannels + 1 || lower(cols.back()) != "eye_state") {
      fail(ErrorCode::ParseError,
           path.string() + ": header must list 30 channels followed by eye_state");
    }
    cols.pop_back();
    rec.channel_labels = std::move(cols);
  }

  std::vector<double> values;
  values.reserve(text.size() / 6);
  std::size_t line_no = 1;
  while (!rest.empty()) {
    std::string_view line = next_line();
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{} || ptr >= end || *ptr != ',') {
        fail(ErrorCode::ParseError, path.string() + ": bad sample on line " +
                                        std::to_string(line_no));
      }
      values.push_back(v);
      p = ptr + 1;
    }
    const auto state = lower(trim(std::string_view(p, static_cast<std::size_t>(end - p))));
    if (state == "open") {
      rec.eye_state_track.push_back(EyeState::Open);
    } else if (state == "closed") {
      rec.eye_state_track.push_back(EyeState::Closed);
    } else {
      fail(ErrorCode::ParseError,
           path.string() + ": bad eye_state on line " + std::to_string(line_no));
    }
  }

  const std::size_t n = rec.eye_state_track.size();
  rec.samples = Matrix(kNumChannels, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      rec.samples(ch, i) = values[i * kNumChannels + ch];
    }
  }
  validate_recording(rec);
  return rec;
}

void write_recording_csv(const RawRecording& recording, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  std::string buf;
  for (const auto& label : recording.channel_labels) {
    buf += label;
    buf += ',';
  }
  buf += "eye_state\n";
  char num[64];
  for (std::size_t i = 0; i < recording.num_samples(); ++i) {
    for (std::size_t ch = 0; ch < recording.num_channels(); ++ch) {
      const int len = std::snprintf(num, sizeof num, "%.4f,", recording.samples(ch, i));
      buf.append(num, static_cast<std::size_t>(len));
    }
    buf += recording.eye_state_track[i] == EyeState::Open ? "open\n" : "closed\n";
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace eegcaps
