#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace diffscribe {

using TokenId = std::int32_t;

// Fixed ids shared by every vocabulary. Sequence boundaries use kStart/kEnd,
// out-of-vocabulary tokens map to kUnk, and the change markers keep stable
// ids so datasets and checkpoints stay comparable across runs.
struct SpecialIds {
  static constexpr TokenId kStart = 0;
  static constexpr TokenId kEnd = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kNewFile = 3;
  static constexpr TokenId kAdd = 4;
  static constexpr TokenId kRemove = 5;
  static constexpr TokenId kCount = 6;
};

inline constexpr const char* kStartToken = "<s>";
inline constexpr const char* kEndToken = "</s>";
inline constexpr const char* kUnkToken = "<unk>";

struct TokenizerConfig {
  int nl_min_count = 3;
  int code_min_count = 2;
  bool lowercase_nl = false;
};

// Penn-Treebank style tokenization for commit messages: whitespace split,
// clause/sentence punctuation detached, contractions split (n't 's 're 've
// 'll 'd), parentheses mapped to -LRB-/-RRB-, interior hyphens preserved.
std::vector<std::string> tokenize_nl(const std::string& message);

// Maximal-munch generic lexer for one source line: identifiers, numeric
// literals, quoted string/char literals kept whole, the usual two-character
// operators, and single punctuation. Whitespace is discarded. An unterminated
// quote swallows the rest of the line as one token.
std::vector<std::string> lex_code_line(const std::string& line);

class Vocabulary {
public:
  // Specials only; ordinary ids start at SpecialIds::kCount.
  Vocabulary();

  // Counts tokens over the given training sequences and keeps every
  // non-special token with count >= min_count, id-ordered by descending
  // frequency then lexicographically. Throws EmptyCorpusError when nothing
  // survives.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sequences,
                          int min_count);

  TokenId id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(TokenId id) const;  // throws BadIdError
  bool contains(const std::string& token) const;
  std::size_t size() const { return id_to_token_.size(); }
  std::int64_t count_of(TokenId id) const { return counts_[id]; }

  // add_boundaries wraps the ids in START/END (used for NL sequences).
  std::vector<TokenId> encode(const std::vector<std::string>& tokens,
                              bool add_boundaries) const;
  // Inverse for in-vocabulary ids; START/END stripped, kUnk decodes to the
  // literal "<unk>" placeholder.
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

  // One "token<TAB>count" line per id, specials first.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::int64_t> counts_;
};

}  // namespace diffscribe
