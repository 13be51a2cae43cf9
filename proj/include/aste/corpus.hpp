#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "aste/error.hpp"

namespace aste {

/// Inclusive word-index interval.
struct Span {
  int start = 0;
  int end = 0;

  bool operator==(const Span& o) const { return start == o.start && end == o.end; }
  bool operator<(const Span& o) const {
    return start != o.start ? start < o.start : end < o.end;
  }
  bool overlaps(const Span& o) const { return start <= o.end && o.start <= end; }
  int length() const { return end - start + 1; }
};

enum class Polarity : int { POS = 0, NEU = 1, NEG = 2 };

const char* polarity_name(Polarity p);
Polarity polarity_from(const std::string& name);  // throws on unknown tag

struct Triplet {
  Span target;
  Span opinion;
  Polarity polarity = Polarity::POS;

  bool operator==(const Triplet& o) const {
    return target == o.target && opinion == o.opinion && polarity == o.polarity;
  }
  bool operator<(const Triplet& o) const {
    if (!(target == o.target)) return target < o.target;
    if (!(opinion == o.opinion)) return opinion < o.opinion;
    return static_cast<int>(polarity) < static_cast<int>(o.polarity);
  }
};

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<Triplet> triplets;

  bool operator==(const AnnotatedSentence& o) const {
    return tokens == o.tokens && triplets == o.triplets;
  }
};

class ParseError : public Error {
 public:
  ParseError(int line_no, const std::string& cause)
      : Error("line " + std::to_string(line_no) + ": " + cause), line_no(line_no), cause(cause) {}
  int line_no;
  std::string cause;
};

/// Parses one `<sentence>####[<tuple>, ...]` line. line_no is only used for
/// error reporting.
AnnotatedSentence parse_line(const std::string& line, int line_no = 0);

/// Inverse of parse_line; parse_line(to_line(s)) == s.
std::string to_line(const AnnotatedSentence& s);

struct SplitStats {
  long sentences = 0;
  long pos = 0;
  long neu = 0;
  long neg = 0;
};

std::pair<std::vector<AnnotatedSentence>, SplitStats> load_split(const std::string& path);

SplitStats count_stats(const std::vector<AnnotatedSentence>& sentences);

/// Word-level vocabulary with fixed reserved ids. Word ids start after the
/// reserved block and are dense.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kTargetBegin = 4;
  static constexpr int kTargetEnd = 5;
  static constexpr int kOpinionBegin = 6;
  static constexpr int kOpinionEnd = 7;
  static constexpr int kReservedCount = 8;

  Vocabulary();

  /// Rebuild from an id-ordered token list (checkpoint load).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  void add_word(const std::string& lowercased);
  int id_of(const std::string& word) const;   // lowercases, [UNK] when absent
  const std::string& token(int id) const;
  bool contains_word(const std::string& word) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

std::string lowercase(const std::string& s);

/// Words with case-folded frequency >= min_freq get ids; ordering is by
/// descending frequency then lexicographic, so builds are deterministic.
Vocabulary build_vocab(const std::vector<AnnotatedSentence>& sentences, int min_freq = 1);

std::vector<int> encode_tokens(const AnnotatedSentence& sentence, const Vocabulary& vocab);

}  // namespace aste
