#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tierprobe {

/// Seven ordered cognitive tiers; the ordinal is the enum value.
enum class Tier : std::uint8_t { Shadow = 0, Striving, Conflict, Activation, Growth, Clarity, Unity };

inline constexpr std::size_t kTierCount = 7;

inline constexpr double kEnergyMin = -5.0;
inline constexpr double kEnergyMax = 5.0;

constexpr int ordinal(Tier t) noexcept { return static_cast<int>(t); }

std::string_view tier_name(Tier t) noexcept;

/// Case-insensitive name lookup.
std::optional<Tier> parse_tier(std::string_view name) noexcept;

std::optional<Tier> tier_from_ordinal(int ordinal) noexcept;

struct SentenceRecord {
  std::string id;
  std::string text;
  Tier tier = Tier::Shadow;
  double energy = 0.0;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

/// Ordered, validated collection of records. Record order defines the row
/// order of every aligned embedding matrix.
struct Corpus {
  std::vector<SentenceRecord> records;
  std::string source;

  std::size_t size() const noexcept { return records.size(); }
  std::vector<std::string> ids() const;
  std::vector<std::string> texts() const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.records == b.records; }
};

/// One itemized problem found while reading a corpus file.
struct CorpusFinding {
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string id;        // empty when the id could not be read
  std::string message;

  std::string to_string() const;
};

/// Lenient parse result: everything that could be read plus every problem.
struct CorpusParse {
  Corpus corpus;
  std::vector<CorpusFinding> errors;
  std::vector<CorpusFinding> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

CorpusParse parse_corpus(std::istream& in, std::string source);

/// Strict loader: throws ValidationError listing every finding.
Corpus load_corpus(const std::filesystem::path& path,
                   std::vector<CorpusFinding>* warnings = nullptr);

/// Validates invariants of an in-memory corpus; throws ValidationError.
void validate_corpus(const Corpus& corpus);

void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct TierStats {
  std::size_t count = 0;
  // Unset when count == 0.
  std::optional<double> min_energy;
  std::optional<double> mean_energy;
  std::optional<double> max_energy;
};

struct CorpusSummary {
  std::array<TierStats, kTierCount> tiers{};
  std::size_t total = 0;
};

CorpusSummary corpus_summary(const Corpus& corpus);

enum class LabelKind { Energy, Tier };

std::string_view label_kind_name(LabelKind k) noexcept;

/// Per-record label view in corpus row order. Tier ordinals are stored as
/// exact small doubles so both kinds share one container.
struct LabelVector {
  LabelKind kind = LabelKind::Energy;
  std::vector<double> values;

  std::vector<int> ordinals() const;
};

LabelVector labels(const Corpus& corpus, LabelKind kind);

}  // namespace tierprobe
