#include "tierprobe/embedstore.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tierprobe/error.hpp"
#include "tierprobe/kernels.hpp"

namespace tierprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t to_le(std::uint32_t v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::vector<std::byte> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw ValidationError("failed reading file: " + path.string());
  return bytes;
}

std::string joined(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace

std::string sha256_hex(std::span<const std::byte> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw ComputationError("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

EmbeddingManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open embedding manifest: " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("malformed embedding manifest " + manifest_path.string() + ": " + e.what());
  }
  EmbeddingManifest m;
  try {
    if (j.at("format").get<std::string>() != EmbeddingManifest::kFormat) {
      throw ValidationError("not an embedding manifest: " + manifest_path.string());
    }
    if (j.at("version").get<int>() != EmbeddingManifest::kVersion) {
      throw ValidationError("unsupported embedding manifest version in " + manifest_path.string());
    }
    m.model_name = j.at("model_name").get<std::string>();
    m.dimension = j.at("dimension").get<std::size_t>();
    m.count = j.at("count").get<std::size_t>();
    m.encoding = j.at("encoding").get<std::string>();
    m.normalized = j.at("normalized").get<bool>();
    m.sha256 = j.at("sha256").get<std::string>();
    m.payload = j.at("payload").get<std::string>();
    m.row_ids = j.at("row_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError("embedding manifest " + manifest_path.string() + ": " + e.what());
  }
  if (m.dimension < 1 || m.count < 1) {
    throw ValidationError("embedding manifest declares an empty matrix (need count >= 1, dimension >= 1)");
  }
  if (m.encoding != EmbeddingManifest::kEncoding) {
    throw ValidationError("unsupported element encoding '" + m.encoding + "' (expected f32le)");
  }
  if (m.row_ids.size() != m.count) {
    throw ValidationError("shape mismatch: manifest count " + std::to_string(m.count) + " but " +
                          std::to_string(m.row_ids.size()) + " row ids");
  }
  return m;
}

EmbeddingMatrix read_embeddings(const fs::path& manifest_path) {
  const EmbeddingManifest m = read_manifest(manifest_path);
  const fs::path payload_path = manifest_path.parent_path() / m.payload;
  const std::vector<std::byte> bytes = read_file(payload_path);

  const std::string digest = sha256_hex(bytes);
  if (digest != m.sha256) {
    throw ValidationError("checksum mismatch for " + payload_path.string() + ": manifest " +
                          m.sha256 + ", payload " + digest);
  }
  const std::size_t expected = m.count * m.dimension * sizeof(float);
  if (bytes.size() != expected) {
    throw ValidationError("shape mismatch: manifest declares " + std::to_string(m.count) + "x" +
                          std::to_string(m.dimension) + " (" + std::to_string(expected) +
                          " bytes) but payload has " + std::to_string(bytes.size()) + " bytes");
  }

  EmbeddingMatrix x;
  x.data = Matrix(m.count, m.dimension);
  x.row_ids = m.row_ids;
  x.model_name = m.model_name;
  x.normalized = m.normalized;
  for (std::size_t i = 0; i < m.count * m.dimension; ++i) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes.data() + i * sizeof(float), sizeof(raw));
    x.data.flat()[i] = static_cast<double>(std::bit_cast<float>(to_le(raw)));
  }
  validate_embeddings(x);
  return x;
}

EmbeddingManifest write_embeddings(const EmbeddingMatrix& x, const fs::path& manifest_path,
                                   fs::path payload_name) {
  validate_embeddings(x);
  if (payload_name.empty()) payload_name = manifest_path.stem().string() + ".f32";

  std::vector<std::byte> bytes(x.data.flat().size() * sizeof(float));
  for (std::size_t i = 0; i < x.data.flat().size(); ++i) {
    const std::uint32_t raw = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(x.data.flat()[i])));
    std::memcpy(bytes.data() + i * sizeof(float), &raw, sizeof(raw));
  }

  EmbeddingManifest m;
  m.model_name = x.model_name;
  m.dimension = x.dim();
  m.count = x.rows();
  m.normalized = x.normalized;
  m.sha256 = sha256_hex(bytes);
  m.payload = payload_name.string();
  m.row_ids = x.row_ids;

  const fs::path payload_path = manifest_path.parent_path() / payload_name;
  {
    std::ofstream out(payload_path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("cannot write payload: " + payload_path.string());
  }
  json j = {{"format", EmbeddingManifest::kFormat},
            {"version", EmbeddingManifest::kVersion},
            {"model_name", m.model_name},
            {"dimension", m.dimension},
            {"count", m.count},
            {"encoding", m.encoding},
            {"normalized", m.normalized},
            {"sha256", m.sha256},
            {"payload", m.payload},
            {"row_ids", m.row_ids}};
  std::ofstream out(manifest_path);
  out << j.dump(2) << '\n';
  if (!out) throw ValidationError("cannot write manifest: " + manifest_path.string());
  return m;
}

void validate_embeddings(const EmbeddingMatrix& x) {
  if (x.rows() < 1 || x.dim() < 1) throw ValidationError("embedding matrix is empty");
  if (x.row_ids.size() != x.rows()) {
    throw ValidationError("shape mismatch: " + std::to_string(x.rows()) + " rows but " +
                          std::to_string(x.row_ids.size()) + " row ids");
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (double v : x.data.row(r)) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite embedding value in row " + std::to_string(r) + " (id " +
                              x.row_ids[r] + ")");
      }
    }
    if (x.normalized) {
      const double norm = std::sqrt(kernels::sum_squares(x.data.row(r)));
      if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        throw ValidationError("row " + std::to_string(r) + " (id " + x.row_ids[r] +
                              ") flagged normalized but has norm " + std::to_string(norm));
      }
    }
  }
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& x) {
  EmbeddingMatrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.data.row(r);
    const double norm = std::sqrt(kernels::sum_squares(row));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw ValidationError("cannot normalize zero-norm row " + std::to_string(r) +
                            (r < x.row_ids.size() ? " (id " + x.row_ids[r] + ")" : ""));
    }
    for (double& v : row) v /= norm;
  }
  out.normalized = true;
  return out;
}

std::string AlignmentReport::describe() const {
  if (ok) return "aligned";
  std::ostringstream os;
  os << "embedding rows do not align with corpus";
  if (!missing.empty()) os << "\n  missing ids: " << joined(missing);
  if (!extra.empty()) os << "\n  extra ids: " << joined(extra);
  if (!duplicates.empty()) os << "\n  duplicate ids: " << joined(duplicates);
  if (reordered) os << "\n  reordered: first order difference at row " << first_mismatch;
  return os.str();
}

AlignmentReport align(const EmbeddingMatrix& x, const Corpus& corpus) {
  AlignmentReport rep;
  std::unordered_set<std::string> matrix_ids;
  for (const auto& id : x.row_ids) {
    if (!matrix_ids.insert(id).second) rep.duplicates.push_back(id);
  }
  std::unordered_set<std::string> corpus_ids;
  for (const auto& r : corpus.records) {
    corpus_ids.insert(r.id);
    if (!matrix_ids.contains(r.id)) rep.missing.push_back(r.id);
  }
  for (const auto& id : x.row_ids) {
    if (!corpus_ids.contains(id)) rep.extra.push_back(id);
  }
  const bool same_set = rep.missing.empty() && rep.extra.empty() && rep.duplicates.empty();
  if (same_set) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (x.row_ids[i] != corpus.records[i].id) {
        rep.reordered = true;
        rep.first_mismatch = i;
        break;
      }
    }
  }
  rep.ok = same_set && !rep.reordered && x.rows() == corpus.size();
  return rep;
}

void require_aligned(const EmbeddingMatrix& x, const Corpus& corpus) {
  const AlignmentReport rep = align(x, corpus);
  if (!rep.ok) throw ValidationError(rep.describe());
}

}  // namespace tierprobe
