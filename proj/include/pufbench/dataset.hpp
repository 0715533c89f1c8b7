#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pufbench/bits.hpp"
#include "pufbench/puf.hpp"

namespace pufbench {

struct Crp {
  Challenge challenge;
  Response response;
};

struct DatasetMetadata {
  std::uint64_t puf_fingerprint = 0;
  std::uint64_t generation_seed = 0;
  std::size_t challenge_bits = 0;
  std::size_t response_bits = 0;
};

/// Ordered challenge-response pairs, kept as two parallel bit matrices.
/// Immutable after construction; order is generation order.
class CrpDataset {
 public:
  CrpDataset() = default;
  CrpDataset(DatasetMetadata metadata, BitMatrix challenges, BitMatrix responses);

  const DatasetMetadata& metadata() const noexcept { return metadata_; }
  std::size_t size() const noexcept { return challenges_.rows(); }
  std::size_t challenge_bits() const noexcept { return metadata_.challenge_bits; }
  std::size_t response_bits() const noexcept { return metadata_.response_bits; }

  const BitMatrix& challenges() const noexcept { return challenges_; }
  const BitMatrix& responses() const noexcept { return responses_; }
  Crp record(std::size_t i) const { return {challenges_.row_vector(i), responses_.row_vector(i)}; }

  CrpDataset subset(std::span<const std::size_t> indices) const;

  /// Widths and records; provenance metadata is not compared.
  friend bool operator==(const CrpDataset& a, const CrpDataset& b) {
    return a.challenge_bits() == b.challenge_bits() && a.response_bits() == b.response_bits() &&
           a.challenges_ == b.challenges_ && a.responses_ == b.responses_;
  }

 private:
  DatasetMetadata metadata_;
  BitMatrix challenges_;
  BitMatrix responses_;
};

struct SplitDataset {
  CrpDataset train;
  CrpDataset validation;
  CrpDataset test;
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
  std::vector<std::size_t> test_indices;
};

/// Records per generation chunk; chunk k draws from child_seed(seed, k).
inline constexpr std::size_t kGenerationChunk = 4096;

/// `count` uniformly random challenges (with replacement) and their responses, in draw order.
CrpDataset generate(const PufInstance& instance, std::size_t count, std::uint64_t seed);

struct SplitSizes {
  std::size_t train;
  std::size_t validation;
  std::size_t test;
};

/// 70:20:10 with floors to validation and test, remainder to train.
SplitSizes split_sizes(std::size_t n);

SplitDataset split(const CrpDataset& dataset, std::uint64_t split_seed);

enum class DatasetFormat { Binary, Csv };

/// Returns the number of bytes written.
std::size_t write_dataset(const CrpDataset& dataset, DatasetFormat format, const std::filesystem::path& destination);
/// CSV carries no width header; pass the widths, or 0 to infer four bits per hex digit.
CrpDataset read_dataset(const std::filesystem::path& source, DatasetFormat format, std::size_t csv_challenge_bits = 0,
                        std::size_t csv_response_bits = 0);

std::vector<std::uint8_t> encode_binary(const CrpDataset& dataset);
CrpDataset decode_binary(std::span<const std::uint8_t> bytes);
std::string encode_csv(const CrpDataset& dataset);
CrpDataset decode_csv(std::string_view text, std::size_t challenge_bits = 0, std::size_t response_bits = 0);

}  // namespace pufbench
