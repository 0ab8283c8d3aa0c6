#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "tierprobe/embedstore.hpp"
#include "tierprobe/error.hpp"

using namespace tierprobe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

EmbeddingMatrix make(std::size_t n, std::size_t d, std::vector<double> values) {
  EmbeddingMatrix x;
  x.data = Matrix(n, d, std::move(values));
  for (std::size_t i = 0; i < n; ++i) x.row_ids.push_back("r" + std::to_string(i));
  x.model_name = "test-model";
  return x;
}

// Writes a payload and manifest by hand so invalid contents can be produced.
fs::path write_raw(const fs::path& dir, const std::vector<float>& values, std::size_t n, std::size_t d) {
  std::vector<std::byte> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::byte>((u >> (8 * b)) & 0xFF);
  }
  std::ofstream(dir / "raw.f32", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                        static_cast<std::streamsize>(bytes.size()));
  nlohmann::json m = {{"format", "tierprobe-embeddings"}, {"version", 1},      {"model_name", "raw"},
                      {"dimension", d},                   {"count", n},        {"encoding", "f32le"},
                      {"normalized", false},              {"payload", "raw.f32"},
                      {"sha256", sha256_hex(bytes)}};
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
  m["row_ids"] = ids;
  std::ofstream(dir / "raw.json") << m.dump(2);
  return dir / "raw.json";
}

Corpus corpus_of(const std::vector<std::string>& ids) {
  Corpus c;
  for (const auto& id : ids) c.records.push_back({id, "t", Tier::Shadow, 0.0});
  return c;
}

}  // namespace

TEST_CASE("sha256 of a known string") {
  const std::string abc = "abc";
  CHECK(sha256_hex(std::as_bytes(std::span(abc.data(), abc.size()))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("2x3 manifest and payload load with declared shape") {
  TempDir dir("tierprobe_emb_shape");
  const auto path = write_raw(dir.path, {1, 2, 3, 4, 5, 6}, 2, 3);
  const auto x = read_embeddings(path);
  CHECK(x.rows() == 2);
  CHECK(x.dim() == 3);
  CHECK(x.data(1, 2) == 6.0);
}

TEST_CASE("NaN in payload is rejected naming the row") {
  TempDir dir("tierprobe_emb_nan");
  const auto path = write_raw(dir.path, {1, 2, 3, 4, std::numeric_limits<float>::quiet_NaN(), 6}, 2, 3);
  try {
    (void)read_embeddings(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("checksum and shape mismatches are detected") {
  TempDir dir("tierprobe_emb_sum");
  const auto path = write_raw(dir.path, {1, 2, 3, 4, 5, 6}, 2, 3);
  {
    std::fstream f(dir.path / "raw.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('\x7f');
  }
  CHECK_THROWS_WITH_AS(read_embeddings(path), doctest::Contains("checksum mismatch"), ValidationError);

  const auto path2 = write_raw(dir.path, {1, 2, 3, 4, 5, 6}, 3, 3);
  CHECK_THROWS_AS(read_embeddings(path2), ValidationError);
}

TEST_CASE("write then read is bit-identical for f32 values") {
  TempDir dir("tierprobe_emb_rt");
  Rng rng(5);
  auto x = make(17, 9, {});
  x.data = oracle::random_matrix(17, 9, rng);
  for (double& v : x.data.flat()) v = static_cast<double>(static_cast<float>(v));
  const auto manifest = write_embeddings(x, dir.path / "m.json");
  CHECK(manifest.sha256 == sha256_file(dir.path / manifest.payload));
  const auto back = read_embeddings(dir.path / "m.json");
  CHECK(back.data == x.data);
  CHECK(back.row_ids == x.row_ids);
  CHECK(back.model_name == "test-model");

  // The on-disk bytes are reproducible too.
  write_embeddings(back, dir.path / "m2.json");
  CHECK(sha256_file(dir.path / "m.f32") == sha256_file(dir.path / "m2.f32"));
}

TEST_CASE("l2 normalization") {
  SUBCASE("3-4-5 triangle") {
    const auto n = l2_normalize(make(1, 2, {3, 4}));
    CHECK(n.data(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n.data(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(n.normalized);
  }
  SUBCASE("zero row names its index") {
    CHECK_THROWS_WITH_AS(l2_normalize(make(2, 2, {1, 0, 0, 0})), doctest::Contains("row 1"), ValidationError);
  }
  SUBCASE("idempotent and cosine preserving") {
    Rng rng(9);
    auto x = make(6, 5, {});
    x.data = oracle::random_matrix(6, 5, rng);
    const auto once = l2_normalize(x);
    const auto twice = l2_normalize(once);
    for (std::size_t i = 0; i < once.data.flat().size(); ++i)
      CHECK(std::abs(once.data.flat()[i] - twice.data.flat()[i]) <= 1e-12);
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = 0; b < 6; ++b) {
        double dot = 0, na = 0, nb = 0, unit = 0;
        for (std::size_t c = 0; c < 5; ++c) {
          dot += x.data(a, c) * x.data(b, c);
          na += x.data(a, c) * x.data(a, c);
          nb += x.data(b, c) * x.data(b, c);
          unit += once.data(a, c) * once.data(b, c);
        }
        CHECK(std::abs(unit - dot / std::sqrt(na * nb)) <= 1e-6);
      }
    }
    CHECK_NOTHROW(validate_embeddings(once));
  }
}

TEST_CASE("normalized flag is enforced") {
  auto x = make(1, 2, {3, 4});
  x.normalized = true;
  CHECK_THROWS_AS(validate_embeddings(x), ValidationError);
}

TEST_CASE("alignment against a corpus") {
  const auto x = make(3, 1, {1, 2, 3});
  SUBCASE("identical ids") { CHECK(align(x, corpus_of({"r0", "r1", "r2"})).ok); }
  SUBCASE("missing id is listed") {
    const auto rep = align(x, corpus_of({"r0", "r1", "r2", "r3"}));
    CHECK_FALSE(rep.ok);
    CHECK(rep.missing == std::vector<std::string>{"r3"});
  }
  SUBCASE("same ids in another order") {
    const auto rep = align(x, corpus_of({"r0", "r2", "r1"}));
    CHECK_FALSE(rep.ok);
    CHECK(rep.reordered);
    CHECK(rep.describe().find("reordered") != std::string::npos);
    CHECK_THROWS_AS(require_aligned(x, corpus_of({"r0", "r2", "r1"})), ValidationError);
  }
}
