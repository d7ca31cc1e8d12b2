#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eegcaps/error.hpp"
#include "eegcaps/experiment.hpp"

namespace eegcaps {

using nlohmann::json;

std::filesystem::path CohortManifest::recording_path(const SubjectEntry& subject) const {
  const auto dir = subject.path.is_absolute() ? subject.path : base_dir / subject.path;
  return dir / "recording.csv";
}

namespace {

template <typename T>
T field(const json& obj, const char* key, std::size_t index) {
  if (!obj.contains(key)) {
    fail(ErrorCode::ParseError,
         "subject " + std::to_string(index) + " lacks key '" + std::string(key) + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "subject " + std::to_string(index) + " key '" + key + "': " + e.what());
  }
}

}  // namespace

CohortManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("subjects") || !doc["subjects"].is_array()) {
    fail(ErrorCode::ParseError, "manifest needs a 'subjects' array");
  }
  CohortManifest m;
  m.base_dir = base_dir;
  m.schema_version = doc.value("schema_version", kManifestSchemaVersion);
  if (m.schema_version != kManifestSchemaVersion) {
    fail(ErrorCode::ParseError, "unsupported schema_version " + std::to_string(m.schema_version));
  }

  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& s : doc["subjects"]) {
    if (!s.is_object()) fail(ErrorCode::ParseError, "subject entries must be objects");
    SubjectEntry e;
    e.id = field<std::string>(s, "id", index);
    e.group = parse_group(field<std::string>(s, "group", index));
    e.path = field<std::string>(s, "path", index);
    e.sample_rate_hz = field<double>(s, "sample_rate_hz", index);
    const auto epochs = field<long long>(s, "epochs_to_take", index);
    if (e.id.empty()) fail(ErrorCode::ParseError, "empty subject id");
    if (!(e.sample_rate_hz > 0.0)) fail(ErrorCode::ParseError, e.id + ": sample rate must be positive");
    if (epochs <= 0) fail(ErrorCode::ParseError, e.id + ": epochs_to_take must be positive");
    e.epochs_to_take = static_cast<std::size_t>(epochs);
    if (!seen.insert(e.id).second) fail(ErrorCode::DuplicateSubject, "duplicate subject " + e.id);
    m.subjects.push_back(std::move(e));
    ++index;
  }
  return m;
}

CohortManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  CohortManifest m = parse_manifest(ss.str(), path.parent_path());
  for (const auto& s : m.subjects) {
    const auto rec = m.recording_path(s);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(rec, ec)) {
      fail(ErrorCode::MissingRecording, s.id + ": " + rec.string() + " not found");
    }
  }
  return m;
}

std::string manifest_to_json(const CohortManifest& manifest) {
  json doc;
  doc["schema_version"] = manifest.schema_version;
  doc["subjects"] = json::array();
  for (const auto& s : manifest.subjects) {
    doc["subjects"].push_back({{"id", s.id},
                               {"group", std::string(to_string(s.group))},
                               {"path", s.path.generic_string()},
                               {"sample_rate_hz", s.sample_rate_hz},
                               {"epochs_to_take", s.epochs_to_take}});
  }
  return doc.dump(2) + "\n";
}

void write_manifest(const CohortManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << manifest_to_json(manifest);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace eegcaps
