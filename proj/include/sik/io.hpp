#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sik/dataset.hpp"
#include "sik/errors.hpp"
#include "sik/features.hpp"
#include "sik/partitioning.hpp"

namespace sik {

// ---------------------------------------------------------------------------
// Little-endian byte encoding.

namespace detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void u8(std::uint8_t v) { out_.push_back(v); }

  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int k = 0; k < width; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::string_view bytes(std::size_t count) {
    need(count);
    std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), count);
    pos_ += count;
    return s;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t count) const {
    if (remaining() < count) throw FormatError(what_ + ": truncated file");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int k = 0; k < width; ++k) v |= std::uint64_t{data_[pos_ + k]} << (8 * k);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SIKM model file.
//
//   "SIKM" | u32 version | u64 d | u64 psi | u64 t | u64 seed
//   then per partitioning: psi*d f64 center coordinates, psi f64 radii.

inline constexpr std::string_view kModelMagic = "SIKM";
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 4 + 4 + 4 * 8;

inline std::vector<std::uint8_t> encode_model(const SphereEnsemble& ensemble) {
  detail::ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelVersion);
  w.u64(ensemble.dim());
  w.u64(ensemble.psi());
  w.u64(ensemble.t());
  w.u64(ensemble.seed());
  for (const auto& p : ensemble.partitionings()) {
    for (double c : p.centers()) w.f64(c);
    for (double r : p.radii()) w.f64(r);
  }
  return std::move(w).take();
}

inline SphereEnsemble decode_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "model");
  if (r.remaining() < kModelHeaderBytes || r.bytes(4) != kModelMagic) {
    throw FormatError("model: missing SIKM magic");
  }
  const auto version = r.u32();
  if (version != kModelVersion) {
    throw FormatError("model: unsupported format version " + std::to_string(version));
  }
  const std::uint64_t d = r.u64();
  const std::uint64_t psi = r.u64();
  const std::uint64_t t = r.u64();
  const std::uint64_t seed = r.u64();
  if (d == 0 || psi == 0 || t == 0) throw FormatError("model: zero d, psi or t in header");
  // Guard the size arithmetic before allocating anything.
  const std::uint64_t limit = r.remaining() / 8;
  if (psi > limit || d > limit / psi || t > limit / (psi * (d + 1)) ||
      t * psi * (d + 1) != limit || r.remaining() % 8 != 0) {
    throw FormatError("model: payload size does not match header");
  }
  std::vector<Partitioning> parts;
  parts.reserve(t);
  for (std::uint64_t i = 0; i < t; ++i) {
    std::vector<double> centers(psi * d);
    for (auto& c : centers) c = r.f64();
    std::vector<double> radii(psi);
    for (auto& rad : radii) rad = r.f64();
    try {
      parts.emplace_back(d, std::move(centers), std::move(radii));
    } catch (const Error& e) {
      throw FormatError(std::string("model: ") + e.what());
    }
  }
  return SphereEnsemble(std::move(parts), seed);
}

inline void save_model(const SphereEnsemble& ensemble, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(ensemble));
}

inline SphereEnsemble load_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// SIKD binary dataset.
//
//   "SIKD" | u64 n | u64 d | n*d f32 values | optional n label bytes (0/1)

inline constexpr std::string_view kDatasetMagic = "SIKD";

inline std::vector<std::uint8_t> encode_dataset(const LabeledDataset& data) {
  data.validate();
  detail::ByteWriter w;
  w.bytes(kDatasetMagic);
  w.u64(data.embeddings.rows());
  w.u64(data.embeddings.cols());
  for (double v : data.embeddings.values()) w.f32(static_cast<float>(v));
  for (auto l : data.labels) w.u8(l);
  return std::move(w).take();
}

inline LabeledDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "dataset");
  if (r.remaining() < 20 || r.bytes(4) != kDatasetMagic) {
    throw FormatError("dataset: missing SIKD magic");
  }
  const std::uint64_t n = r.u64();
  const std::uint64_t d = r.u64();
  if (n == 0 || d == 0) throw FormatError("dataset: zero n or d in header");
  const std::uint64_t cells = r.remaining() / 4;
  if (d > cells || n > cells / d) throw FormatError("dataset: payload shorter than header");
  std::vector<double> values(n * d);
  for (auto& v : values) v = static_cast<double>(r.f32());
  LabeledDataset out;
  if (r.remaining() == n) {
    out.labels.resize(n);
    for (auto& l : out.labels) {
      l = r.u8();
      if (l > 1) throw FormatError("dataset: label bytes must be 0 or 1");
    }
  } else if (r.remaining() != 0) {
    throw FormatError("dataset: trailing bytes are neither empty nor an n-byte label block");
  }
  try {
    out.embeddings = EmbeddingMatrix(n, d, std::move(values));
  } catch (const Error& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV dataset: optional header row; when the header's last column is
// `label` (or `labeled` is forced) the last column holds 0/1 labels.

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace detail

inline LabeledDataset parse_csv_dataset(std::string_view text, bool force_labeled = false) {
  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool labeled = force_labeled;
  bool first = true;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);

    if (first) {
      first = false;
      double probe;
      const bool header = std::any_of(fields.begin(), fields.end(), [&](std::string_view f) {
        return !detail::parse_double(f, probe);
      });
      if (header) {
        std::string last(fields.back());
        std::transform(last.begin(), last.end(), last.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        labeled = labeled || last == "label";
        cols = fields.size();
        continue;
      }
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    }
    const std::size_t features = labeled ? cols - 1 : cols;
    if (features == 0) throw FormatError("csv: no feature columns");
    for (std::size_t k = 0; k < cols; ++k) {
      double v;
      if (!detail::parse_double(fields[k], v)) {
        throw FormatError("csv line " + std::to_string(line_no) + ": cannot parse '" +
                          std::string(fields[k]) + "'");
      }
      if (k < features) {
        values.push_back(v);
      } else if (v == 0.0 || v == 1.0) {
        labels.push_back(static_cast<std::uint8_t>(v));
      } else {
        throw FormatError("csv line " + std::to_string(line_no) + ": label must be 0 or 1");
      }
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("csv: no data rows");
  LabeledDataset out;
  try {
    out.embeddings = EmbeddingMatrix(rows, labeled ? cols - 1 : cols, std::move(values));
  } catch (const Error& e) {
    throw FormatError(std::string("csv: ") + e.what());
  }
  out.labels = std::move(labels);
  return out;
}

inline std::string to_csv(const LabeledDataset& data) {
  data.validate();
  std::string out;
  const auto& m = data.embeddings;
  for (std::size_t k = 0; k < m.cols(); ++k) {
    if (k) out += ',';
    out += "x" + std::to_string(k);
  }
  if (data.labeled()) out += ",label";
  out += '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < m.cols(); ++k) {
      if (k) out += ',';
      out += detail::format_double(m(i, k));
    }
    if (data.labeled()) out += data.labels[i] ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

inline bool has_extension(const std::filesystem::path& path, std::string_view ext) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ext;
}

/// Reads `.sikd` as binary and anything else as CSV.
inline LabeledDataset load_dataset(const std::filesystem::path& path, bool force_labeled = false) {
  const auto bytes = detail::read_file(path);
  LabeledDataset data;
  if (has_extension(path, ".sikd")) {
    data = decode_dataset(bytes);
  } else {
    data = parse_csv_dataset(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
        force_labeled);
  }
  data.validate();
  return data;
}

inline void save_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
  if (has_extension(path, ".sikd")) {
    detail::write_file(path, encode_dataset(data));
  } else {
    const std::string text = to_csv(data);
    detail::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  }
}

// ---------------------------------------------------------------------------
// Score and feature exports.

/// `index,score[,label]`, scores at 17 significant digits.
inline void write_scores_csv(std::ostream& out, std::span<const double> scores,
                             std::span<const std::uint8_t> labels = {}) {
  if (!labels.empty() && labels.size() != scores.size()) {
    throw ShapeError("score and label counts differ");
  }
  out << (labels.empty() ? "index,score\n" : "index,score,label\n");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out << i << ',' << detail::format_double(scores[i]);
    if (!labels.empty()) out << ',' << static_cast<int>(labels[i]);
    out << '\n';
  }
}

/// One row per point, t columns of 0/1.
inline void write_features_csv(std::ostream& out, std::span<const SikFeature> features) {
  for (const auto& f : features) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out << ',';
      out << (f.test(i) ? '1' : '0');
    }
    out << '\n';
  }
}

/// One row per point, t columns of sphere indices with -1 for none.
inline void write_features_csv(std::ostream& out, std::span<const IkFeature> features) {
  for (const auto& f : features) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out << ',';
      out << f[i].raw();
    }
    out << '\n';
  }
}

}  // namespace sik
