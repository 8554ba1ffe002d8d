#include "bregman_perceptron/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "bregman_perceptron/errors.hpp"
#include "bregman_perceptron/random.hpp"

namespace bregman {

// IDX layout: big-endian u32 magic, one big-endian u32 per dimension, then
// raw unsigned bytes. Images are 0x00000803 (count, rows, cols), labels
// 0x00000801 (count).

namespace {

bool is_gzip_path(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::vector<std::uint8_t> read_plain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorKind::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::uint8_t> read_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IdxError(IdxErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 16);
  for (;;) {
    const int got = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (got < 0) {
      int errnum = 0;
      const std::string msg = gzerror(f, &errnum);
      gzclose(f);
      throw IdxError(IdxErrorKind::Io, "gzip error in " + path.string() + ": " + msg);
    }
    if (got == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + got);
  }
  gzclose(f);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  return is_gzip_path(path) ? read_gzip(path) : read_plain(path);
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void check_header(const std::vector<std::uint8_t>& bytes, std::size_t header_len, std::uint32_t magic,
                  const std::filesystem::path& path) {
  if (bytes.size() < 4) throw IdxError(IdxErrorKind::Truncated, path.string() + ": file shorter than magic");
  const std::uint32_t got = read_be32(bytes, 0);
  if (got != magic) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), ": magic 0x%08x, expected 0x%08x", got, magic);
    throw IdxError(IdxErrorKind::BadMagic, path.string() + buf);
  }
  if (bytes.size() < header_len) throw IdxError(IdxErrorKind::Truncated, path.string() + ": truncated header");
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (is_gzip_path(path)) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw IdxError(IdxErrorKind::Io, "cannot write " + path.string());
    const int wrote = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (wrote != static_cast<int>(bytes.size())) throw IdxError(IdxErrorKind::Io, "short write " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IdxError(IdxErrorKind::Io, "cannot write " + path.string());
}

}  // namespace

IdxImages load_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  check_header(bytes, 16, kIdxImageMagic, path);
  IdxImages img;
  img.count = read_be32(bytes, 4);
  img.rows = read_be32(bytes, 8);
  img.cols = read_be32(bytes, 12);

  const std::uint64_t per_image = std::uint64_t{img.rows} * img.cols;  // < 2^64
  if (per_image != 0 && img.count > std::numeric_limits<std::uint64_t>::max() / per_image) {
    throw IdxError(IdxErrorKind::DimensionOverflow, path.string() + ": count * rows * cols overflows");
  }
  const std::uint64_t total = per_image * img.count;
  if (total > std::numeric_limits<std::size_t>::max() - 16 || total > bytes.max_size()) {
    throw IdxError(IdxErrorKind::DimensionOverflow, path.string() + ": payload too large");
  }
  if (bytes.size() - 16 < total) {
    throw IdxError(IdxErrorKind::Truncated, path.string() + ": header declares " + std::to_string(total) +
                                                " pixel bytes, file has " + std::to_string(bytes.size() - 16));
  }
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(total));
  return img;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  check_header(bytes, 8, kIdxLabelMagic, path);
  const std::uint32_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) {
    throw IdxError(IdxErrorKind::Truncated, path.string() + ": header declares " + std::to_string(count) +
                                                " labels, file has " + std::to_string(bytes.size() - 8));
  }
  return std::vector<int>(bytes.begin() + 8, bytes.begin() + 8 + count);
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  const std::size_t expected = std::size_t{images.count} * images.rows * images.cols;
  if (images.pixels.size() != expected) throw DimensionError("write_idx_images: pixel count mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(16 + expected);
  append_be32(out, kIdxImageMagic);
  append_be32(out, images.count);
  append_be32(out, images.rows);
  append_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  write_bytes(path, out);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  append_be32(out, kIdxLabelMagic);
  append_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw std::out_of_range("write_idx_labels: label does not fit a byte");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  write_bytes(path, out);
}

DenseMatrix normalize_pixels(const IdxImages& images) {
  const std::size_t m = std::size_t{images.rows} * images.cols;
  DenseMatrix X(images.count, m);
  auto dst = X.values();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = images.pixels[k] / 255.0;
  return X;
}

DenseMatrix one_hot(std::span<const int> labels, std::size_t n_classes) {
  DenseMatrix Y(labels.size(), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes) {
      throw std::out_of_range("one_hot: label " + std::to_string(l) + " at index " + std::to_string(i) +
                              " outside [0, " + std::to_string(n_classes) + ")");
    }
    Y(i, static_cast<std::size_t>(l)) = 1.0;
  }
  return Y;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

LabeledDataset make_dataset(DenseMatrix X, std::vector<int> labels, std::size_t n_classes) {
  if (X.rows() != labels.size()) {
    throw DimensionError("make_dataset: " + std::to_string(X.rows()) + " inputs but " +
                         std::to_string(labels.size()) + " labels");
  }
  LabeledDataset d;
  d.Y = one_hot(labels, n_classes);
  d.X = std::move(X);
  d.labels = std::move(labels);
  d.n_classes = n_classes;
  return d;
}

LabeledDataset subsample(const LabeledDataset& data, std::size_t count, std::uint64_t seed) {
  if (count > data.size()) {
    throw std::invalid_argument("subsample: requested " + std::to_string(count) + " of " +
                                std::to_string(data.size()) + " samples");
  }
  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(data.size(), count);
  DenseMatrix X(count, data.input_dim());
  std::vector<int> labels(count);
  for (std::size_t r = 0; r < count; ++r) {
    std::ranges::copy(data.X.row(picks[r]), X.row(r).begin());
    labels[r] = data.labels[picks[r]];
  }
  return make_dataset(std::move(X), std::move(labels), data.n_classes);
}

LabeledDataset synthetic_dataset(std::size_t s, std::size_t m, std::size_t n_classes, std::uint64_t seed,
                                 double noise) {
  if (s == 0 || m == 0 || n_classes == 0) throw std::invalid_argument("synthetic_dataset: sizes must be positive");
  if (!(noise >= 0.0)) throw std::invalid_argument("synthetic_dataset: noise must be >= 0");
  Rng rng(seed);
  DenseMatrix templates(n_classes, m);
  for (double& t : templates.values()) t = rng.uniform01();

  const auto order = rng.sample_without_replacement(s, s);
  DenseMatrix X(s, m);
  std::vector<int> labels(s);
  for (std::size_t r = 0; r < s; ++r) {
    const std::size_t c = order[r] % n_classes;
    labels[r] = static_cast<int>(c);
    auto row = X.row(r);
    const auto tpl = templates.row(c);
    for (std::size_t i = 0; i < m; ++i) {
      const double v = noise > 0.0 ? tpl[i] + rng.uniform(-noise, noise) : tpl[i];
      row[i] = std::clamp(v, 0.0, 1.0);
    }
  }
  return make_dataset(std::move(X), std::move(labels), n_classes);
}

std::vector<std::string> expected_idx_filenames() {
  return {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
          "t10k-labels-idx1-ubyte"};
}

TrainTestSplit load_idx_directory(const std::filesystem::path& dir, std::size_t n_classes) {
  const auto names = expected_idx_filenames();
  std::vector<std::filesystem::path> found;
  std::string missing;
  for (const auto& name : names) {
    const auto bare = dir / name;
    const auto gz = dir / (name + ".gz");
    if (std::filesystem::is_regular_file(bare)) {
      found.push_back(bare);
    } else if (std::filesystem::is_regular_file(gz)) {
      found.push_back(gz);
    } else {
      missing += missing.empty() ? name : ", " + name;
    }
  }
  if (!missing.empty()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw IdxError(IdxErrorKind::MissingFile, "missing IDX files in '" + dir.string() + "': " + missing +
                                                  " (expected " + all + ", optionally .gz)");
  }
  auto build = [&](const std::filesystem::path& images, const std::filesystem::path& labels) {
    const IdxImages raw = load_idx_images(images);
    auto y = load_idx_labels(labels);
    if (y.size() != raw.count) {
      throw IdxError(IdxErrorKind::Truncated, images.string() + " and " + labels.string() + " disagree on count");
    }
    return make_dataset(normalize_pixels(raw), std::move(y), n_classes);
  };
  return {build(found[0], found[1]), build(found[2], found[3])};
}

}  // namespace bregman
