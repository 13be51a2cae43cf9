#include "aste/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace aste {

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::POS: return "POS";
    case Polarity::NEU: return "NEU";
    case Polarity::NEG: return "NEG";
  }
  fail("invalid polarity value");
}

Polarity polarity_from(const std::string& name) {
  if (name == "POS") return Polarity::POS;
  if (name == "NEU") return Polarity::NEU;
  if (name == "NEG") return Polarity::NEG;
  fail("unknown polarity tag '", name, "'");
}

namespace {

// Hand-rolled scanner over the annotation part of a line:
//   [([i1, i2], [j1], 'POS'), ...]
// Index lists must be strictly increasing and contiguous.
class AnnotationParser {
 public:
  AnnotationParser(std::string text, int line_no) : text_(std::move(text)), line_no_(line_no) {}

  std::vector<Triplet> parse(int sentence_len) {
    expect('[');
    std::vector<Triplet> out;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
    } else {
      while (true) {
        out.push_back(parse_tuple(sentence_len));
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          continue;
        }
        expect(']');
        break;
      }
    }
    skip_ws();
    if (pos_ != text_.size()) die("trailing characters after annotation list");
    return out;
  }

 private:
  Triplet parse_tuple(int sentence_len) {
    expect('(');
    Span target = parse_span(sentence_len, "target");
    expect_sep();
    Span opinion = parse_span(sentence_len, "opinion");
    expect_sep();
    Polarity pol = parse_polarity();
    skip_ws();
    expect(')');
    if (target.overlaps(opinion)) die("target and opinion spans overlap");
    return Triplet{target, opinion, pol};
  }

  Span parse_span(int sentence_len, const char* which) {
    expect('[');
    std::vector<int> idx;
    skip_ws();
    while (true) {
      idx.push_back(parse_int());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
        continue;
      }
      expect(']');
      break;
    }
    if (idx.empty()) die(std::string(which) + " index list is empty");
    for (std::size_t i = 1; i < idx.size(); ++i)
      if (idx[i] != idx[i - 1] + 1) die(std::string(which) + " index list is not contiguous");
    if (idx.front() < 0 || idx.back() >= sentence_len)
      die(std::string(which) + " index out of range for " + std::to_string(sentence_len) +
          " tokens");
    return Span{idx.front(), idx.back()};
  }

  Polarity parse_polarity() {
    expect('\'');
    std::string tag;
    while (pos_ < text_.size() && text_[pos_] != '\'') tag.push_back(text_[pos_++]);
    expect('\'');
    try {
      return polarity_from(tag);
    } catch (const Error& e) {
      die(e.what());
    }
  }

  int parse_int() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) die("expected an index");
    return std::stoi(text_.substr(start, pos_ - start));
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c)
      die(std::string("expected '") + c + "' at offset " + std::to_string(pos_));
    ++pos_;
  }

  void expect_sep() {
    skip_ws();
    expect(',');
    skip_ws();
  }

  void skip_ws() {
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
  }

  [[noreturn]] void die(const std::string& cause) const { throw ParseError(line_no_, cause); }

  std::string text_;
  int line_no_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

AnnotatedSentence parse_line(const std::string& line, int line_no) {
  const std::size_t sep = line.rfind("####");
  if (sep == std::string::npos) throw ParseError(line_no, "missing '####' separator");

  AnnotatedSentence s;
  s.tokens = split_whitespace(line.substr(0, sep));
  if (s.tokens.empty()) throw ParseError(line_no, "empty sentence");

  AnnotationParser ap(line.substr(sep + 4), line_no);
  s.triplets = ap.parse(static_cast<int>(s.tokens.size()));

  std::set<Triplet> seen;
  for (const Triplet& t : s.triplets)
    if (!seen.insert(t).second) throw ParseError(line_no, "duplicate triplet");
  return s;
}

std::string to_line(const AnnotatedSentence& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) os << ' ';
    os << s.tokens[i];
  }
  os << "####[";
  for (std::size_t i = 0; i < s.triplets.size(); ++i) {
    const Triplet& t = s.triplets[i];
    if (i) os << ", ";
    os << "([";
    for (int w = t.target.start; w <= t.target.end; ++w) {
      if (w != t.target.start) os << ", ";
      os << w;
    }
    os << "], [";
    for (int w = t.opinion.start; w <= t.opinion.end; ++w) {
      if (w != t.opinion.start) os << ", ";
      os << w;
    }
    os << "], '" << polarity_name(t.polarity) << "')";
  }
  os << "]";
  return os.str();
}

std::pair<std::vector<AnnotatedSentence>, SplitStats> load_split(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open dataset file: ", path);
  std::vector<AnnotatedSentence> sentences;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    sentences.push_back(parse_line(line, line_no));
  }
  return {sentences, count_stats(sentences)};
}

SplitStats count_stats(const std::vector<AnnotatedSentence>& sentences) {
  SplitStats st;
  st.sentences = static_cast<long>(sentences.size());
  for (const auto& s : sentences) {
    for (const Triplet& t : s.triplets) {
      switch (t.polarity) {
        case Polarity::POS: ++st.pos; break;
        case Polarity::NEU: ++st.neu; break;
        case Polarity::NEG: ++st.neg; break;
      }
    }
  }
  return st;
}

namespace {
const char* kReservedTokens[Vocabulary::kReservedCount] = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[T-B]", "[T-E]", "[O-B]", "[O-E]"};
}

Vocabulary::Vocabulary() {
  for (int i = 0; i < kReservedCount; ++i) {
    tokens_.emplace_back(kReservedTokens[i]);
    ids_[tokens_.back()] = i;
  }
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  check(tokens.size() >= kReservedCount, "vocabulary payload too small");
  for (int i = 0; i < kReservedCount; ++i)
    check(tokens[static_cast<std::size_t>(i)] == kReservedTokens[i],
          "vocabulary payload: reserved token mismatch at id ", i);
  Vocabulary v;
  for (std::size_t i = kReservedCount; i < tokens.size(); ++i) v.add_word(tokens[i]);
  return v;
}

void Vocabulary::add_word(const std::string& lowercased) {
  if (ids_.count(lowercased)) return;
  ids_[lowercased] = static_cast<int>(tokens_.size());
  tokens_.push_back(lowercased);
}

int Vocabulary::id_of(const std::string& word) const {
  auto it = ids_.find(lowercase(word));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  check(id >= 0 && id < size(), "token id ", id, " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains_word(const std::string& word) const {
  return ids_.count(lowercase(word)) != 0;
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Vocabulary build_vocab(const std::vector<AnnotatedSentence>& sentences, int min_freq) {
  check(min_freq >= 1, "build_vocab: min_freq must be >= 1");
  std::map<std::string, long> freq;
  for (const auto& s : sentences)
    for (const auto& tok : s.tokens) ++freq[lowercase(tok)];

  std::vector<std::pair<std::string, long>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocabulary v;
  for (const auto& [word, count] : entries)
    if (count >= min_freq) v.add_word(word);
  return v;
}

std::vector<int> encode_tokens(const AnnotatedSentence& sentence, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) ids.push_back(vocab.id_of(tok));
  return ids;
}

}  // namespace aste
