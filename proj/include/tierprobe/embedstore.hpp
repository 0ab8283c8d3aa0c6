#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tierprobe/corpus.hpp"
#include "tierprobe/matrix.hpp"

namespace tierprobe {

/// N x d sentence embeddings with the ids of the corpus rows they belong to.
/// Values are held at 64-bit precision regardless of the storage encoding.
struct EmbeddingMatrix {
  Matrix data;
  std::vector<std::string> row_ids;
  std::string model_name;
  bool normalized = false;

  std::size_t rows() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }
};

struct EmbeddingManifest {
  static constexpr std::string_view kFormat = "tierprobe-embeddings";
  static constexpr int kVersion = 1;
  static constexpr std::string_view kEncoding = "f32le";

  std::string model_name;
  std::size_t dimension = 0;
  std::size_t count = 0;
  std::string encoding{kEncoding};
  bool normalized = false;
  std::string sha256;   // lowercase hex of the payload bytes
  std::string payload;  // path relative to the manifest's directory
  std::vector<std::string> row_ids;
};

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Reads manifest + payload; checks checksum, shape and finiteness.
EmbeddingMatrix read_embeddings(const std::filesystem::path& manifest_path);

EmbeddingManifest read_manifest(const std::filesystem::path& manifest_path);

/// Writes `<manifest_path>` and its payload (default: manifest stem + ".f32").
/// Values are rounded to 32-bit floats on the way out.
EmbeddingManifest write_embeddings(const EmbeddingMatrix& x,
                                   const std::filesystem::path& manifest_path,
                                   std::filesystem::path payload_name = {});

/// Checks the EmbeddingMatrix invariants (shape, finiteness, unit rows when
/// flagged normalized). Throws ValidationError naming the offending row.
void validate_embeddings(const EmbeddingMatrix& x);

/// Tolerance used when checking that flagged-normalized rows have unit norm.
inline constexpr double kUnitNormTolerance = 1e-6;

/// Scales every row to unit Euclidean norm. Zero-norm rows are an error.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& x);

struct AlignmentReport {
  bool ok = false;
  std::vector<std::string> missing;     // corpus ids absent from the matrix
  std::vector<std::string> extra;       // matrix ids absent from the corpus
  std::vector<std::string> duplicates;  // ids repeated in the matrix
  bool reordered = false;               // same id set, different order
  std::size_t first_mismatch = 0;       // row of the first order difference

  std::string describe() const;
};

AlignmentReport align(const EmbeddingMatrix& x, const Corpus& corpus);

/// Throws ValidationError carrying describe() when alignment fails.
void require_aligned(const EmbeddingMatrix& x, const Corpus& corpus);

}  // namespace tierprobe
