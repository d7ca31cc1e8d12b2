#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "eegcaps/capsnet/checkpoint.hpp"
#include "eegcaps/error.hpp"

namespace eegcaps::capsnet {

namespace {

constexpr unsigned char kMagic[6] = {'C', 'A', 'P', 'S', '1', '\0'};

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }

  void tensor(const Tensor& t) {
    put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (double v : t.values()) put<double>(v);
  }

  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) fail(ErrorCode::FormatError, "truncated checkpoint");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  Tensor tensor() {
    const auto rank = get<std::uint32_t>();
    if (rank > 8) fail(ErrorCode::FormatError, "implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint32_t>();
    const std::size_t n = shape_size(shape);
    if ((bytes_.size() - pos_) / sizeof(double) < n) {
      fail(ErrorCode::FormatError, "truncated tensor payload");
    }
    std::vector<double> data(n);
    std::memcpy(data.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return Tensor(std::move(shape), std::move(data));
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  check_params(ckpt.params, ckpt.config);
  Writer w;
  w.bytes.assign(std::begin(kMagic), std::end(kMagic));
  for (std::uint32_t f : config_fields(ckpt.config)) w.put<std::uint32_t>(f);
  for (const Tensor* t : ckpt.params.tensors()) w.tensor(*t);
  w.put<std::uint32_t>(ckpt.context ? 1u : 0u);
  if (ckpt.context) {
    const auto& ctx = *ckpt.context;
    const std::size_t c = ctx.normalizer.mean.size();
    w.tensor(Tensor({c}, ctx.normalizer.mean));
    w.tensor(Tensor({c}, ctx.normalizer.stddev));
    w.put<std::uint64_t>(ctx.folds_seed);
    w.put<std::uint32_t>(ctx.fold_index);
    w.put<std::uint32_t>(ctx.num_folds);
  }
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < sizeof kMagic || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    fail(ErrorCode::FormatError, "bad checkpoint magic");
  }
  Reader r(bytes.subspan(sizeof kMagic));
  std::array<std::uint32_t, 12> fields{};
  for (auto& f : fields) f = r.get<std::uint32_t>();

  Checkpoint ckpt;
  ckpt.config = config_from_fields(fields);
  validate_config(ckpt.config);
  for (Tensor* t : ckpt.params.tensors()) *t = r.tensor();
  check_params(ckpt.params, ckpt.config);

  const auto flag = r.get<std::uint32_t>();
  if (flag > 1) fail(ErrorCode::FormatError, "bad context flag");
  if (flag == 1) {
    TrainingContext ctx;
    const Tensor mean = r.tensor();
    const Tensor stddev = r.tensor();
    if (mean.rank() != 1 || stddev.shape() != mean.shape()) {
      fail(ErrorCode::FormatError, "normalizer tensors must be matching vectors");
    }
    ctx.normalizer.mean = mean.values();
    ctx.normalizer.stddev = stddev.values();
    ctx.folds_seed = r.get<std::uint64_t>();
    ctx.fold_index = r.get<std::uint32_t>();
    ctx.num_folds = r.get<std::uint32_t>();
    ckpt.context = std::move(ctx);
  }
  if (!r.done()) fail(ErrorCode::FormatError, "trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace eegcaps::capsnet
