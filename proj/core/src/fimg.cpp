#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "eegcaps/error.hpp"
#include "eegcaps/topomap.hpp"

namespace eegcaps {

namespace {

constexpr unsigned char kMagic[6] = {'F', 'I', 'M', 'G', '1', '\0'};

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::span<const unsigned char> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::FormatError, "truncated .fimg data");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_fimg(const FeatureImage& image) {
  if (image.data.size() != image.channels * image.plane_size()) {
    fail(ErrorCode::ShapeMismatch, "image data size does not match its shape");
  }
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(64 + image.subject_id.size() + 4 * image.data.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(image.channels));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(image.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(image.width));
  put<std::uint32_t>(out, label_of(image.group));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(image.subject_id.size()));
  out.insert(out.end(), image.subject_id.begin(), image.subject_id.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(image.epoch_index));
  for (double v : image.data) put<float>(out, static_cast<float>(v));
  return out;
}

FeatureImage decode_fimg(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  const auto magic = r.take(sizeof kMagic);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    fail(ErrorCode::FormatError, "bad .fimg magic");
  }
  FeatureImage img;
  img.channels = r.get<std::uint32_t>();
  img.height = r.get<std::uint32_t>();
  img.width = r.get<std::uint32_t>();
  const auto label = r.get<std::uint32_t>();
  if (label > 1) fail(ErrorCode::FormatError, "label must be 0 or 1");
  img.group = static_cast<Group>(label);
  const auto id_len = r.get<std::uint32_t>();
  const auto id = r.take(id_len);
  img.subject_id.assign(id.begin(), id.end());
  img.epoch_index = r.get<std::uint32_t>();
  const std::size_t n = img.channels * img.height * img.width;
  img.data.resize(n);
  for (std::size_t k = 0; k < n; ++k) img.data[k] = r.get<float>();
  if (!r.done()) fail(ErrorCode::FormatError, "trailing bytes after .fimg payload");
  return img;
}

void write_fimg(const FeatureImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_fimg(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

FeatureImage read_fimg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_fimg(bytes);
}

std::string fimg_filename(const FeatureImage& image) {
  char idx[16];
  std::snprintf(idx, sizeof idx, "%05zu", image.epoch_index);
  return image.subject_id + "_" + idx + ".fimg";
}

std::vector<FeatureImage> read_fimg_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    fail(ErrorCode::IoError, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".fimg") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<FeatureImage> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_fimg(f));
  return images;
}

}  // namespace eegcaps
