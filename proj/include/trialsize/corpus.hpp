#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace trialsize {

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
  std::string surface;
  std::string lower;
  std::string stem;
  std::size_t position = 0;
  CharSpan span;
  std::optional<std::int64_t> numeric_value;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::size_t index_in_abstract = 0;
  std::string raw;
  std::vector<Token> tokens;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Closed set of section categories. Anything unrecognised maps to OTHER.
inline constexpr std::string_view kCategories[] = {
    "BACKGROUND", "OBJECTIVE", "METHODS", "RESULTS", "CONCLUSIONS", "OTHER"};

std::string canonical_category(std::string_view raw);

// Guesses a category from a free-text heading ("Patients and methods" ->
// METHODS). Used by the plain-text importer.
std::string category_from_heading(std::string_view heading);

struct Section {
  std::optional<std::string> category;
  std::optional<std::string> label;
  std::string text;
  std::vector<Sentence> sentences;

  friend bool operator==(const Section&, const Section&) = default;
};

struct Abstract {
  std::string id;
  std::vector<Section> sections;
  std::optional<std::int64_t> gold_size;

  std::size_t sentence_count() const;
  // Sentence by its abstract-wide index; throws std::out_of_range.
  const Sentence& sentence(std::size_t index_in_abstract) const;
  // Section holding the sentence with the given abstract-wide index.
  std::size_t section_of(std::size_t index_in_abstract) const;

  friend bool operator==(const Abstract&, const Abstract&) = default;
};

struct SectionInput {
  std::optional<std::string> category;
  std::optional<std::string> label;
  std::string text;
};

// Splits, tokenizes and number-normalizes every section. Throws CorpusError
// when the result would violate the abstract invariants.
Abstract build_abstract(std::string id, const std::vector<SectionInput>& sections,
                        std::optional<std::int64_t> gold_size);

// Sentence splitting on '.', '!' or '?' followed by whitespace and an
// uppercase letter or digit. Never splits inside parentheses/brackets, inside
// decimals, or after a few common abbreviations.
std::vector<std::string> split_sentences(std::string_view text);

// Whitespace tokenization with ( ) [ ] , ; : = detached. A trailing sentence
// period is detached too, and a comma between digit groups ("1,477") stays
// inside the number.
std::vector<Token> tokenize(std::string_view sentence);

// Replaces runs of spelled-out number words with one numeric token and parses
// digit tokens. Positions are reindexed.
std::vector<Token> normalize_number_words(const std::vector<Token>& tokens);

// tokenize + normalize_number_words.
std::vector<Token> preprocess_sentence(std::string_view sentence);

// Value of a single spelled-out integer phrase ("one hundred and five"),
// or nullopt if the words do not form a well-formed number.
std::optional<std::int64_t> compose_number_words(const std::vector<std::string>& words);

bool is_number_word(std::string_view lower_word);

std::string to_lower(std::string_view s);

// --- corpus files -----------------------------------------------------------

enum class OnMalformed { kAbort, kSkip };

struct CorpusLoad {
  std::vector<Abstract> abstracts;
  std::vector<std::string> diagnostics;
};

Abstract abstract_from_json(const nlohmann::json& j, std::size_t line = 0);
nlohmann::json abstract_to_json(const Abstract& a);

// Reads a JSON-lines corpus. Blank lines are ignored.
CorpusLoad load_corpus(const std::filesystem::path& path,
                       OnMalformed policy = OnMalformed::kAbort);
CorpusLoad parse_corpus(std::string_view content,
                        OnMalformed policy = OnMalformed::kAbort);

void write_corpus(const std::filesystem::path& path, const std::vector<Abstract>& corpus);

// Plain-text importer: one abstract per file, "HEADING: text" lines start a
// new section; other lines continue the current one.
Abstract import_plain(std::string_view content, std::string id,
                      std::optional<std::int64_t> gold_size = std::nullopt);

}  // namespace trialsize
