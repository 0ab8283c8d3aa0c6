#include "tierprobe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tierprobe/error.hpp"
#include "tierprobe/format.hpp"

namespace tierprobe {

namespace {

constexpr std::array<std::string_view, kTierCount> kTierNames = {
    "Shadow", "Striving", "Conflict", "Activation", "Growth", "Clarity", "Unity"};

constexpr std::array<std::string_view, 4> kColumns = {"id", "text", "tier", "energy"};

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  // from_chars rejects a leading '+', which hand-edited files commonly use.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::string join_findings(const std::vector<CorpusFinding>& findings) {
  std::ostringstream os;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    if (i) os << '\n';
    os << findings[i].to_string();
  }
  return os.str();
}

}  // namespace

std::string_view tier_name(Tier t) noexcept { return kTierNames[static_cast<std::size_t>(t)]; }

std::optional<Tier> parse_tier(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kTierCount; ++i) {
    if (iequals(name, kTierNames[i])) return static_cast<Tier>(i);
  }
  return std::nullopt;
}

std::optional<Tier> tier_from_ordinal(int ordinal) noexcept {
  if (ordinal < 0 || ordinal >= static_cast<int>(kTierCount)) return std::nullopt;
  return static_cast<Tier>(ordinal);
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

std::vector<std::string> Corpus::texts() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.text);
  return out;
}

std::string CorpusFinding::to_string() const {
  std::ostringstream os;
  if (line) os << "line " << line;
  if (!id.empty()) os << (line ? " " : "") << "[id " << id << "]";
  if (line || !id.empty()) os << ": ";
  os << message;
  return os.str();
}

CorpusParse parse_corpus(std::istream& in, std::string source) {
  CorpusParse result;
  result.corpus.source = std::move(source);

  std::string line;
  std::size_t line_no = 0;
  std::array<std::size_t, 4> column{};  // field -> column position

  // Header.
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    bool complete = fields.size() == kColumns.size();
    for (std::size_t c = 0; c < kColumns.size() && complete; ++c) {
      auto it = std::find_if(fields.begin(), fields.end(),
                             [&](std::string_view f) { return iequals(f, kColumns[c]); });
      if (it == fields.end()) {
        complete = false;
      } else {
        column[c] = static_cast<std::size_t>(it - fields.begin());
      }
    }
    if (!complete) {
      result.errors.push_back({line_no, "", "missing or malformed header; expected tab-separated "
                                            "columns id, text, tier, energy"});
      return result;
    }
    have_header = true;
    break;
  }
  if (!have_header) {
    result.errors.push_back({0, "", "empty corpus file (header line required)"});
    return result;
  }

  std::unordered_map<std::string, std::size_t> id_line;
  std::unordered_map<std::string, std::string> text_owner;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != kColumns.size()) {
      result.errors.push_back({line_no, fields.empty() ? "" : std::string(fields[0]),
                               "malformed line: expected 4 tab-separated fields, found " +
                                   std::to_string(fields.size())});
      continue;
    }
    SentenceRecord rec;
    rec.id = std::string(fields[column[0]]);
    rec.text = std::string(fields[column[1]]);
    const std::string_view tier_field = fields[column[2]];
    const std::string_view energy_field = fields[column[3]];

    bool bad = false;
    auto fail = [&](std::string msg) {
      result.errors.push_back({line_no, rec.id, std::move(msg)});
      bad = true;
    };
    if (rec.id.empty()) fail("missing field: id");
    if (rec.text.empty()) fail("missing field: text");
    if (auto t = parse_tier(tier_field)) {
      rec.tier = *t;
    } else {
      fail(tier_field.empty() ? "missing field: tier" : "unknown tier '" + std::string(tier_field) + "'");
    }
    if (auto e = parse_double(energy_field)) {
      if (!std::isfinite(*e) || *e < kEnergyMin || *e > kEnergyMax) {
        fail("energy out of range [-5, 5]: " + std::string(energy_field));
      }
      rec.energy = *e;
    } else {
      fail(energy_field.empty() ? "missing field: energy"
                                : "malformed energy '" + std::string(energy_field) + "'");
    }
    if (!rec.id.empty()) {
      auto [it, inserted] = id_line.emplace(rec.id, line_no);
      if (!inserted) fail("duplicate id (first seen on line " + std::to_string(it->second) + ")");
    }
    if (bad) continue;
    auto [owner, fresh] = text_owner.emplace(rec.text, rec.id);
    if (!fresh) {
      result.warnings.push_back({line_no, rec.id, "duplicate text (same as id " + owner->second + ")"});
    }
    result.corpus.records.push_back(std::move(rec));
  }

  if (result.errors.empty() && result.corpus.records.empty()) {
    result.errors.push_back({0, "", "corpus contains no records"});
  }
  return result;
}

Corpus load_corpus(const std::filesystem::path& path, std::vector<CorpusFinding>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus file: " + path.string());
  CorpusParse parsed = parse_corpus(in, path.string());
  if (!parsed.ok()) {
    throw ValidationError("invalid corpus " + path.string() + ":\n" + join_findings(parsed.errors));
  }
  if (warnings) *warnings = std::move(parsed.warnings);
  return std::move(parsed.corpus);
}

void validate_corpus(const Corpus& corpus) {
  std::vector<CorpusFinding> errors;
  if (corpus.records.empty()) errors.push_back({0, "", "corpus contains no records"});
  std::unordered_set<std::string> seen;
  for (const auto& r : corpus.records) {
    if (r.id.empty()) errors.push_back({0, "", "missing field: id"});
    if (r.text.empty()) errors.push_back({0, r.id, "missing field: text"});
    if (r.text.find_first_of("\t\n\r") != std::string::npos) {
      errors.push_back({0, r.id, "text contains a tab or line break"});
    }
    if (!std::isfinite(r.energy) || r.energy < kEnergyMin || r.energy > kEnergyMax) {
      errors.push_back({0, r.id, "energy out of range [-5, 5]: " + format_shortest(r.energy)});
    }
    if (static_cast<std::size_t>(r.tier) >= kTierCount) errors.push_back({0, r.id, "unknown tier"});
    if (!seen.insert(r.id).second) errors.push_back({0, r.id, "duplicate id"});
  }
  if (!errors.empty()) throw ValidationError("invalid corpus:\n" + join_findings(errors));
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  validate_corpus(corpus);
  out << "id\ttext\ttier\tenergy\n";
  for (const auto& r : corpus.records) {
    out << r.id << '\t' << r.text << '\t' << tier_name(r.tier) << '\t' << format_shortest(r.energy)
        << '\n';
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write corpus file: " + path.string());
  write_corpus(corpus, out);
}

CorpusSummary corpus_summary(const Corpus& corpus) {
  CorpusSummary s;
  std::array<double, kTierCount> sums{};
  for (const auto& r : corpus.records) {
    auto& t = s.tiers[static_cast<std::size_t>(r.tier)];
    ++t.count;
    sums[static_cast<std::size_t>(r.tier)] += r.energy;
    t.min_energy = t.min_energy ? std::min(*t.min_energy, r.energy) : r.energy;
    t.max_energy = t.max_energy ? std::max(*t.max_energy, r.energy) : r.energy;
  }
  for (std::size_t k = 0; k < kTierCount; ++k) {
    if (s.tiers[k].count) s.tiers[k].mean_energy = sums[k] / static_cast<double>(s.tiers[k].count);
    s.total += s.tiers[k].count;
  }
  return s;
}

std::string_view label_kind_name(LabelKind k) noexcept {
  return k == LabelKind::Energy ? "energy" : "tier";
}

std::vector<int> LabelVector::ordinals() const {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(static_cast<int>(v));
  return out;
}

LabelVector labels(const Corpus& corpus, LabelKind kind) {
  LabelVector out{kind, {}};
  out.values.reserve(corpus.size());
  for (const auto& r : corpus.records) {
    out.values.push_back(kind == LabelKind::Energy ? r.energy
                                                   : static_cast<double>(ordinal(r.tier)));
  }
  return out;
}

}  // namespace tierprobe
