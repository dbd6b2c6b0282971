#include "trialsize/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "trialsize/porter.hpp"

namespace trialsize {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

constexpr std::array<std::string_view, 10> kUnits{
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
constexpr std::array<std::string_view, 10> kTeens{
    "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
constexpr std::array<std::string_view, 8> kTens{
    "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

std::optional<int> unit_value(std::string_view w) {
  for (std::size_t i = 1; i < kUnits.size(); ++i)
    if (kUnits[i] == w) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> tens_value(std::string_view w) {
  for (std::size_t i = 0; i < kTens.size(); ++i)
    if (kTens[i] == w) return static_cast<int>(20 + 10 * i);
  return std::nullopt;
}

std::optional<int> teen_value(std::string_view w) {
  for (std::size_t i = 0; i < kTeens.size(); ++i)
    if (kTeens[i] == w) return static_cast<int>(10 + i);
  return std::nullopt;
}

std::optional<int> hyphenated_value(std::string_view w) {
  const auto dash = w.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  const auto tens = tens_value(w.substr(0, dash));
  const auto unit = unit_value(w.substr(dash + 1));
  if (!tens || !unit) return std::nullopt;
  return *tens + *unit;
}

// Recursive-descent parser over a word list for the grammar
//   number   := "zero" | b1000 ("million" rest)? | ...
//   b1000    := unit "hundred" ("and"? u100)? | u100
//   u100     := tens-unit | teen | tens unit? | unit
class NumberParser {
 public:
  explicit NumberParser(const std::vector<std::string>& words) : w_(words) {}

  std::optional<std::int64_t> parse() {
    if (w_.size() == 1 && w_[0] == "zero") return 0;
    std::int64_t total = 0;
    auto seg = below_thousand();
    if (!seg) return std::nullopt;
    if (peek("million")) {
      ++i_;
      total += *seg * 1'000'000;
      if (done()) return total;
      skip_and();
      seg = below_thousand();
      if (!seg) return std::nullopt;
    }
    if (peek("thousand")) {
      ++i_;
      total += *seg * 1'000;
      if (done()) return total;
      skip_and();
      seg = below_thousand();
      if (!seg) return std::nullopt;
    }
    total += *seg;
    if (!done()) return std::nullopt;
    return total;
  }

 private:
  bool done() const { return i_ == w_.size(); }
  bool peek(std::string_view s) const { return i_ < w_.size() && w_[i_] == s; }
  void skip_and() {
    if (peek("and")) ++i_;
  }

  std::optional<std::int64_t> below_thousand() {
    if (i_ + 1 < w_.size() && w_[i_ + 1] == "hundred") {
      if (const auto u = unit_value(w_[i_])) {
        i_ += 2;
        std::int64_t v = *u * 100;
        const std::size_t save = i_;
        skip_and();
        if (const auto rest = below_hundred()) {
          v += *rest;
        } else {
          i_ = save;
        }
        return v;
      }
    }
    return below_hundred();
  }

  std::optional<std::int64_t> below_hundred() {
    if (done()) return std::nullopt;
    const std::string& w = w_[i_];
    if (const auto h = hyphenated_value(w)) {
      ++i_;
      return *h;
    }
    if (const auto t = teen_value(w)) {
      ++i_;
      return *t;
    }
    if (const auto t = tens_value(w)) {
      ++i_;
      if (!done()) {
        if (const auto u = unit_value(w_[i_])) {
          ++i_;
          return *t + *u;
        }
      }
      return *t;
    }
    if (const auto u = unit_value(w)) {
      ++i_;
      return *u;
    }
    return std::nullopt;
  }

  const std::vector<std::string>& w_;
  std::size_t i_ = 0;
};

std::optional<std::int64_t> parse_digits(std::string_view s) {
  std::string digits;
  for (char c : s) {
    if (is_digit(c)) {
      digits.push_back(c);
    } else if (c != ',') {
      return std::nullopt;
    }
  }
  if (digits.empty() || s.front() == ',' || s.back() == ',' || digits.size() > 18)
    return std::nullopt;
  return std::stoll(digits);
}

const std::set<std::string, std::less<>> kAbbreviations{
    "e.g", "i.e", "vs", "al", "approx", "fig", "dr", "mr", "mrs", "ms", "cf", "ca"};

bool detached(char c) {
  switch (c) {
    case '(': case ')': case '[': case ']': case ',': case ';': case ':': case '=':
      return true;
    default:
      return false;
  }
}

Token make_token(std::string_view sentence, std::size_t start, std::size_t end) {
  Token t;
  t.surface = std::string(sentence.substr(start, end - start));
  t.lower = to_lower(t.surface);
  t.stem = porter_stem(t.lower);
  t.span = {start, end};
  return t;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string category_from_heading(std::string_view heading) {
  const std::string h = to_lower(heading);
  if (contains(h, "conclu")) return "CONCLUSIONS";
  if (contains(h, "result") || contains(h, "finding")) return "RESULTS";
  if (contains(h, "method") || contains(h, "design") || contains(h, "patient") ||
      contains(h, "participant") || contains(h, "setting") || contains(h, "intervention") ||
      contains(h, "measure"))
    return "METHODS";
  if (contains(h, "background") || contains(h, "introduction") || contains(h, "context") ||
      contains(h, "rationale"))
    return "BACKGROUND";
  if (contains(h, "objective") || contains(h, "aim") || contains(h, "purpose") ||
      contains(h, "goal"))
    return "OBJECTIVE";
  return "OTHER";
}

std::string canonical_category(std::string_view raw) {
  std::string up(raw);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto c : kCategories)
    if (c == up) return up;
  return category_from_heading(raw);
}

bool is_number_word(std::string_view w) {
  return w == "zero" || unit_value(w) || teen_value(w) || tens_value(w) ||
         hyphenated_value(w) || w == "hundred" || w == "thousand" || w == "million";
}

std::optional<std::int64_t> compose_number_words(const std::vector<std::string>& words) {
  if (words.empty()) return std::nullopt;
  return NumberParser(words).parse();
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  int depth = 0;
  auto emit = [&](std::size_t end) {
    std::size_t b = begin;
    while (b < end && is_space(text[b])) ++b;
    std::size_t e = end;
    while (e > b && is_space(text[e - 1])) --e;
    if (e > b) out.emplace_back(text.substr(b, e - b));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(' || c == '[') {
      ++depth;
      continue;
    }
    if (c == ')' || c == ']') {
      depth = std::max(0, depth - 1);
      continue;
    }
    if ((c != '.' && c != '!' && c != '?') || depth > 0) continue;
    std::size_t j = i + 1;
    if (j >= text.size() || !is_space(text[j])) continue;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j >= text.size() || !(is_upper(text[j]) || is_digit(text[j]))) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > begin && !is_space(text[w - 1])) --w;
      if (kAbbreviations.count(to_lower(text.substr(w, i - w)))) continue;
    }
    emit(i + 1);
    begin = i + 1;
  }
  emit(text.size());
  return out;
}

std::vector<Token> tokenize(std::string_view sentence) {
  std::vector<Token> out;
  auto push_piece = [&](std::size_t s, std::size_t e) {
    if (e <= s) return;
    std::size_t cut = e;
    while (cut > s && (sentence[cut - 1] == '.' || sentence[cut - 1] == '!' ||
                       sentence[cut - 1] == '?'))
      --cut;
    if (cut > s && cut < e) {
      out.push_back(make_token(sentence, s, cut));
      out.push_back(make_token(sentence, cut, e));
    } else {
      out.push_back(make_token(sentence, s, e));
    }
  };
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    const std::size_t s = i;
    while (i < sentence.size() && !is_space(sentence[i])) ++i;
    const std::size_t e = i;
    std::size_t piece = s;
    for (std::size_t k = s; k < e; ++k) {
      const char c = sentence[k];
      if (!detached(c)) continue;
      if (c == ',' && k > s && is_digit(sentence[k - 1]) && k + 3 < e &&
          is_digit(sentence[k + 1]) && is_digit(sentence[k + 2]) &&
          is_digit(sentence[k + 3]) && (k + 4 == e || !is_digit(sentence[k + 4])))
        continue;
      push_piece(piece, k);
      out.push_back(make_token(sentence, k, k + 1));
      piece = k + 1;
    }
    push_piece(piece, e);
  }
  for (std::size_t p = 0; p < out.size(); ++p) out[p].position = p;
  return out;
}

std::vector<Token> normalize_number_words(const std::vector<Token>& tokens) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Token& t = tokens[i];
    if (const auto v = parse_digits(t.surface)) {
      Token n = t;
      n.numeric_value = *v;
      n.stem = std::to_string(*v);
      out.push_back(std::move(n));
      ++i;
      continue;
    }
    if (!is_number_word(t.lower)) {
      out.push_back(t);
      ++i;
      continue;
    }
    // Extent of the run of number words and interleaved "and".
    std::size_t run_end = i;
    while (run_end < tokens.size() &&
           (is_number_word(tokens[run_end].lower) || tokens[run_end].lower == "and"))
      ++run_end;
    // Longest well-formed prefix starting at i.
    std::vector<std::string> words;
    std::optional<std::int64_t> best_value;
    std::size_t best_end = i;
    for (std::size_t j = i; j < run_end; ++j) {
      words.push_back(tokens[j].lower);
      if (const auto v = compose_number_words(words)) {
        best_value = v;
        best_end = j + 1;
      }
    }
    if (!best_value) {
      out.push_back(t);
      ++i;
      continue;
    }
    Token n;
    for (std::size_t j = i; j < best_end; ++j) {
      if (j > i) n.surface.push_back(' ');
      n.surface += tokens[j].surface;
    }
    n.lower = to_lower(n.surface);
    n.stem = std::to_string(*best_value);
    n.span = {tokens[i].span.start, tokens[best_end - 1].span.end};
    n.numeric_value = best_value;
    out.push_back(std::move(n));
    i = best_end;
  }
  for (std::size_t p = 0; p < out.size(); ++p) out[p].position = p;
  return out;
}

std::vector<Token> preprocess_sentence(std::string_view sentence) {
  return normalize_number_words(tokenize(sentence));
}

std::size_t Abstract::sentence_count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.sentences.size();
  return n;
}

std::size_t Abstract::section_of(std::size_t index) const {
  std::size_t base = 0;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    if (index < base + sections[s].sentences.size()) return s;
    base += sections[s].sentences.size();
  }
  throw std::out_of_range("sentence index " + std::to_string(index) + " out of range in " + id);
}

const Sentence& Abstract::sentence(std::size_t index) const {
  std::size_t base = 0;
  for (const auto& s : sections) {
    if (index < base + s.sentences.size()) return s.sentences[index - base];
    base += s.sentences.size();
  }
  throw std::out_of_range("sentence index " + std::to_string(index) + " out of range in " + id);
}

Abstract build_abstract(std::string id, const std::vector<SectionInput>& sections,
                        std::optional<std::int64_t> gold_size) {
  if (id.empty()) throw CorpusError(0, "abstract id is empty");
  if (gold_size && *gold_size < 1)
    throw CorpusError(0, "gold_size of '" + id + "' must be >= 1");
  Abstract a;
  a.id = std::move(id);
  a.gold_size = gold_size;
  std::size_t next_index = 0;
  for (const auto& in : sections) {
    Section s;
    if (in.category) s.category = canonical_category(*in.category);
    s.label = in.label;
    s.text = in.text;
    for (auto& raw : split_sentences(in.text)) {
      Sentence sent;
      sent.index_in_abstract = next_index++;
      sent.tokens = preprocess_sentence(raw);
      sent.raw = std::move(raw);
      s.sentences.push_back(std::move(sent));
    }
    a.sections.push_back(std::move(s));
  }
  if (next_index == 0) throw CorpusError(0, "abstract '" + a.id + "' has no sentences");
  return a;
}

Abstract abstract_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw CorpusError(line, "expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string())
    throw CorpusError(line, "missing string field \"id\"");
  if (!j.contains("sections") || !j["sections"].is_array())
    throw CorpusError(line, "missing array field \"sections\"");
  std::optional<std::int64_t> gold;
  if (j.contains("gold_size") && !j["gold_size"].is_null()) {
    const auto& g = j["gold_size"];
    if (!g.is_number_integer()) throw CorpusError(line, "\"gold_size\" is not an integer");
    if (g.is_number_unsigned() &&
        g.get<std::uint64_t>() > static_cast<std::uint64_t>(
                                      std::numeric_limits<std::int64_t>::max()))
      throw CorpusError(line, "\"gold_size\" out of range");
    gold = g.get<std::int64_t>();
  }
  std::vector<SectionInput> sections;
  for (const auto& s : j["sections"]) {
    if (!s.is_object() || !s.contains("text") || !s["text"].is_string())
      throw CorpusError(line, "section without string field \"text\"");
    SectionInput in;
    in.text = s["text"].get<std::string>();
    for (const char* key : {"category", "label"}) {
      if (!s.contains(key) || s[key].is_null()) continue;
      if (!s[key].is_string())
        throw CorpusError(line, std::string("section field \"") + key + "\" is not a string");
      (std::string_view(key) == "category" ? in.category : in.label) = s[key].get<std::string>();
    }
    sections.push_back(std::move(in));
  }
  try {
    return build_abstract(j["id"].get<std::string>(), sections, gold);
  } catch (const CorpusError& e) {
    throw CorpusError(line, e.what());
  }
}

nlohmann::json abstract_to_json(const Abstract& a) {
  nlohmann::json j;
  j["id"] = a.id;
  j["gold_size"] = a.gold_size ? nlohmann::json(*a.gold_size) : nlohmann::json(nullptr);
  auto& sections = j["sections"] = nlohmann::json::array();
  for (const auto& s : a.sections) {
    sections.push_back({
        {"category", s.category ? nlohmann::json(*s.category) : nlohmann::json(nullptr)},
        {"label", s.label ? nlohmann::json(*s.label) : nlohmann::json(nullptr)},
        {"text", s.text},
    });
  }
  return j;
}

CorpusLoad parse_corpus(std::string_view content, OnMalformed policy) {
  CorpusLoad result;
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw CorpusError(line_no, std::string("invalid JSON: ") + e.what());
      }
      Abstract a = abstract_from_json(j, line_no);
      if (!ids.insert(a.id).second)
        throw CorpusError(line_no, "duplicate abstract id '" + a.id + "'");
      result.abstracts.push_back(std::move(a));
    } catch (const CorpusError& e) {
      if (policy == OnMalformed::kAbort) throw;
      result.diagnostics.emplace_back(e.what());
    }
  }
  return result;
}

CorpusLoad load_corpus(const std::filesystem::path& path, OnMalformed policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(0, "cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw CorpusError(0, "failed reading corpus file " + path.string());
  return parse_corpus(buf.str(), policy);
}

void write_corpus(const std::filesystem::path& path, const std::vector<Abstract>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError(0, "cannot write corpus file " + path.string());
  for (const auto& a : corpus) out << abstract_to_json(a).dump() << '\n';
}

Abstract import_plain(std::string_view content, std::string id,
                      std::optional<std::int64_t> gold_size) {
  std::vector<SectionInput> sections;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    const auto colon = line.find(':');
    bool heading = colon != std::string::npos && colon > 0 && colon <= 60 &&
                   std::isalpha(static_cast<unsigned char>(line[0]));
    for (std::size_t k = 0; heading && k < colon; ++k) {
      const char c = line[k];
      heading = std::isalpha(static_cast<unsigned char>(c)) || c == ' ' || c == '&' ||
                c == '-' || c == '/';
    }
    if (heading) {
      SectionInput s;
      s.label = line.substr(0, colon);
      s.category = category_from_heading(*s.label);
      const auto body = line.find_first_not_of(" \t", colon + 1);
      if (body != std::string::npos) s.text = line.substr(body);
      sections.push_back(std::move(s));
      continue;
    }
    if (sections.empty()) sections.emplace_back();
    auto& text = sections.back().text;
    if (!text.empty()) text.push_back(' ');
    text += line;
  }
  return build_abstract(std::move(id), sections, gold_size);
}

}  // namespace trialsize
