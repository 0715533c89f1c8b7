#include "pufbench/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pufbench/error.hpp"
#include "pufbench/rng.hpp"

namespace pufbench {

namespace {

constexpr std::uint8_t kMagic[4] = {0x43, 0x52, 0x50, 0x31};  // "CRP1"
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

std::size_t bytes_for(std::size_t bits) { return (bits + 7) / 8; }

void pack_bits(std::span<const std::uint8_t> bits, std::uint8_t* out) {
  std::fill(out, out + bytes_for(bits.size()), 0);
  for (std::size_t j = 0; j < bits.size(); ++j) out[j / 8] |= static_cast<std::uint8_t>(bits[j] << (j % 8));
}

void unpack_bits(const std::uint8_t* in, std::span<std::uint8_t> bits) {
  for (std::size_t j = 0; j < bits.size(); ++j) bits[j] = (in[j / 8] >> (j % 8)) & 1U;
}

std::string to_hex(std::span<const std::uint8_t> bits) {
  if (bits.size() > 64) throw Error(ErrorKind::InvalidArgument, "csv hex encoding supports widths up to 64 bits");
  std::uint64_t v = 0;
  for (std::size_t j = 0; j < bits.size(); ++j) v |= std::uint64_t{bits[j]} << j;
  const std::size_t digits = (bits.size() + 3) / 4;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(digits, '0');
  for (std::size_t d = 0; d < digits; ++d) s[digits - 1 - d] = kHex[(v >> (4 * d)) & 0xF];
  return s;
}

std::uint64_t from_hex(std::string_view s) {
  if (s.empty() || s.size() > 16) throw Error(ErrorKind::InvalidArgument, "bad hex field '" + std::string(s) + "'");
  std::uint64_t v = 0;
  for (char ch : s) {
    int d;
    if (ch >= '0' && ch <= '9') d = ch - '0';
    else if (ch >= 'a' && ch <= 'f') d = ch - 'a' + 10;
    else throw Error(ErrorKind::InvalidArgument, "bad hex digit in '" + std::string(s) + "'");
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

}  // namespace

CrpDataset::CrpDataset(DatasetMetadata metadata, BitMatrix challenges, BitMatrix responses)
    : metadata_(metadata), challenges_(std::move(challenges)), responses_(std::move(responses)) {
  if (challenges_.rows() != responses_.rows()) throw Error(ErrorKind::CountMismatch, "challenge/response row counts");
  if (challenges_.cols() != metadata_.challenge_bits || responses_.cols() != metadata_.response_bits) {
    throw Error(ErrorKind::WidthMismatch, "record widths disagree with dataset metadata");
  }
}

CrpDataset CrpDataset::subset(std::span<const std::size_t> indices) const {
  return CrpDataset(metadata_, challenges_.select_rows(indices), responses_.select_rows(indices));
}

CrpDataset generate(const PufInstance& instance, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorKind::InvalidArgument, "dataset count must be at least 1");
  const std::size_t nc = instance.challenge_bits();
  const std::size_t nr = instance.response_bits();
  BitMatrix challenges(count, nc);
  BitMatrix responses(count, nr);
  for (std::size_t chunk = 0; chunk * kGenerationChunk < count; ++chunk) {
    Rng rng = make_rng(child_seed(seed, chunk));
    const std::size_t end = std::min(count, (chunk + 1) * kGenerationChunk);
    for (std::size_t i = chunk * kGenerationChunk; i < end; ++i) {
      auto c = challenges.row(i);
      for (std::size_t j = 0; j < nc; j += 64) {
        const std::uint64_t word = rng();
        for (std::size_t b = j; b < std::min(nc, j + 64); ++b) c[b] = (word >> (b - j)) & 1U;
      }
      instance.evaluate_into(c, responses.row(i));
    }
  }
  DatasetMetadata meta{instance.config().fingerprint(), seed, nc, nr};
  return CrpDataset(meta, std::move(challenges), std::move(responses));
}

SplitSizes split_sizes(std::size_t n) {
  const std::size_t validation = n / 5;  // floor(0.2 n)
  const std::size_t test = n / 10;       // floor(0.1 n)
  return {n - validation - test, validation, test};
}

SplitDataset split(const CrpDataset& dataset, std::uint64_t split_seed) {
  const std::size_t n = dataset.size();
  if (n < 10) throw Error(ErrorKind::InvalidArgument, "dataset too small to split (need at least 10 records)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(split_seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  const auto sizes = split_sizes(n);
  SplitDataset out;
  out.split_seed = split_seed;
  auto first = perm.begin();
  out.validation_indices.assign(first, first + sizes.validation);
  out.test_indices.assign(first + sizes.validation, first + sizes.validation + sizes.test);
  out.train_indices.assign(first + sizes.validation + sizes.test, perm.end());
  for (auto* idx : {&out.train_indices, &out.validation_indices, &out.test_indices}) std::sort(idx->begin(), idx->end());
  out.train = dataset.subset(out.train_indices);
  out.validation = dataset.subset(out.validation_indices);
  out.test = dataset.subset(out.test_indices);
  return out;
}

std::vector<std::uint8_t> encode_binary(const CrpDataset& ds) {
  const std::size_t nc = ds.challenge_bits();
  const std::size_t nr = ds.response_bits();
  if (nc > 255 || nr > 255) throw Error(ErrorKind::InvalidArgument, "binary format stores widths in one byte");
  const std::size_t record = bytes_for(nc) + bytes_for(nr);
  std::vector<std::uint8_t> out(kHeaderBytes + record * ds.size(), 0);
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  out[4] = kVersion & 0xFF;
  out[5] = kVersion >> 8;
  out[6] = static_cast<std::uint8_t>(nc);
  out[7] = static_cast<std::uint8_t>(nr);
  const std::uint64_t count = ds.size();
  for (int b = 0; b < 8; ++b) out[8 + b] = static_cast<std::uint8_t>(count >> (8 * b));
  std::uint8_t* p = out.data() + kHeaderBytes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    pack_bits(ds.challenges().row(i), p);
    p += bytes_for(nc);
    pack_bits(ds.responses().row(i), p);
    p += bytes_for(nr);
  }
  return out;
}

CrpDataset decode_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    if (bytes.size() >= 4 && !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
      throw Error(ErrorKind::BadMagic, "not a CRP1 file");
    }
    throw Error(ErrorKind::TruncatedFile, "header is shorter than 16 bytes");
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) throw Error(ErrorKind::BadMagic, "not a CRP1 file");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kVersion) throw Error(ErrorKind::UnsupportedVersion, "CRP1 version " + std::to_string(version));
  const std::size_t nc = bytes[6];
  const std::size_t nr = bytes[7];
  if (nc == 0 || nr == 0) throw Error(ErrorKind::InvalidArgument, "zero challenge or response width");
  std::uint64_t count = 0;
  for (int b = 0; b < 8; ++b) count |= std::uint64_t{bytes[8 + b]} << (8 * b);
  const std::size_t record = bytes_for(nc) + bytes_for(nr);
  const std::size_t body = bytes.size() - kHeaderBytes;
  if (count > body / record) throw Error(ErrorKind::TruncatedFile, "file ends before the declared record count");
  if (body != count * record) throw Error(ErrorKind::CountMismatch, "trailing bytes after the declared records");
  BitMatrix challenges(count, nc);
  BitMatrix responses(count, nr);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) {
    unpack_bits(p, challenges.row(i));
    p += bytes_for(nc);
    unpack_bits(p, responses.row(i));
    p += bytes_for(nr);
  }
  return CrpDataset(DatasetMetadata{0, 0, nc, nr}, std::move(challenges), std::move(responses));
}

std::string encode_csv(const CrpDataset& ds) {
  std::string out = "challenge,response\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += to_hex(ds.challenges().row(i));
    out += ',';
    out += to_hex(ds.responses().row(i));
    out += '\n';
  }
  return out;
}

CrpDataset decode_csv(std::string_view text, std::size_t nc, std::size_t nr) {
  std::vector<std::pair<std::string_view, std::string_view>> rows;
  bool header = true;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "challenge,response") throw Error(ErrorKind::BadMagic, "missing 'challenge,response' header");
      header = false;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string_view::npos) throw Error(ErrorKind::TruncatedFile, "row without a response field");
    rows.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  if (header) throw Error(ErrorKind::BadMagic, "missing 'challenge,response' header");
  if (rows.empty()) throw Error(ErrorKind::CountMismatch, "csv has no records");
  if (nc == 0) nc = rows.front().first.size() * 4;
  if (nr == 0) nr = rows.front().second.size() * 4;
  if (nc > 64 || nr > 64) throw Error(ErrorKind::InvalidArgument, "csv hex encoding supports widths up to 64 bits");
  BitMatrix challenges(rows.size(), nc);
  BitMatrix responses(rows.size(), nr);
  auto fill = [](std::string_view field, std::size_t width, std::span<std::uint8_t> dst) {
    if (field.size() != (width + 3) / 4) throw Error(ErrorKind::WidthMismatch, "hex field width disagrees with dataset");
    const std::uint64_t v = from_hex(field);
    if (width < 64 && (v >> width) != 0) throw Error(ErrorKind::WidthMismatch, "value exceeds the declared width");
    for (std::size_t j = 0; j < width; ++j) dst[j] = (v >> j) & 1U;
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    fill(rows[i].first, nc, challenges.row(i));
    fill(rows[i].second, nr, responses.row(i));
  }
  return CrpDataset(DatasetMetadata{0, 0, nc, nr}, std::move(challenges), std::move(responses));
}

std::size_t write_dataset(const CrpDataset& ds, DatasetFormat format, const std::filesystem::path& destination) {
  if (destination.empty()) throw Error(ErrorKind::Io, "empty destination path");
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + destination.string() + "' for writing");
  std::size_t written = 0;
  if (format == DatasetFormat::Binary) {
    auto bytes = encode_binary(ds);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    written = bytes.size();
  } else {
    auto text = encode_csv(ds);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    written = text.size();
  }
  if (!out) throw Error(ErrorKind::Io, "write to '" + destination.string() + "' failed");
  return written;
}

CrpDataset read_dataset(const std::filesystem::path& source, DatasetFormat format, std::size_t nc, std::size_t nr) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + source.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (format == DatasetFormat::Binary) {
    return decode_binary(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  }
  return decode_csv(bytes, nc, nr);
}

}  // namespace pufbench
