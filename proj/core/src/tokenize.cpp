#include "diffscribe/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "diffscribe/diff.hpp"
#include "diffscribe/errors.hpp"

namespace diffscribe {
namespace {

bool is_clause_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '?' || c == '!';
}

bool ends_with_nocase(const std::string& s, const char* suffix) {
  std::size_t n = std::char_traits<char>::length(suffix);
  if (s.size() < n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    char a = static_cast<char>(std::tolower(static_cast<unsigned char>(s[s.size() - n + i])));
    if (a != suffix[i]) return false;
  }
  return true;
}

// Emits one whitespace-delimited chunk (already free of parentheses) as
// tokens: leading/trailing clause punctuation detached, contraction suffix
// split off the core.
void emit_word(const std::string& chunk, std::vector<std::string>& out) {
  std::size_t begin = 0, end = chunk.size();
  std::vector<std::string> leading, trailing;
  while (begin < end && is_clause_punct(chunk[begin]))
    leading.push_back(std::string(1, chunk[begin++]));
  while (end > begin && is_clause_punct(chunk[end - 1]))
    trailing.push_back(std::string(1, chunk[--end]));
  std::reverse(trailing.begin(), trailing.end());

  for (auto& t : leading) out.push_back(std::move(t));
  std::string core = chunk.substr(begin, end - begin);
  if (!core.empty()) {
    static const char* kSuffixes[] = {"n't", "'s", "'re", "'ve", "'ll", "'d"};
    bool split = false;
    for (const char* suf : kSuffixes) {
      std::size_t n = std::char_traits<char>::length(suf);
      if (core.size() > n && ends_with_nocase(core, suf)) {
        out.push_back(core.substr(0, core.size() - n));
        out.push_back(core.substr(core.size() - n));
        split = true;
        break;
      }
    }
    if (!split) out.push_back(std::move(core));
  }
  for (auto& t : trailing) out.push_back(std::move(t));
}

}  // namespace

std::vector<std::string> tokenize_nl(const std::string& message) {
  std::vector<std::string> tokens;
  std::string chunk;
  auto flush = [&]() {
    if (!chunk.empty()) {
      emit_word(chunk, tokens);
      chunk.clear();
    }
  };
  for (char c : message) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '(') {
      flush();
      tokens.push_back("-LRB-");
    } else if (c == ')') {
      flush();
      tokens.push_back("-RRB-");
    } else {
      chunk.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> lex_code_line(const std::string& line) {
  std::vector<std::string> tokens;
  const std::size_t n = line.size();
  std::size_t i = 0;
  auto is_ident_start = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  };
  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  static const char* kTwoCharOps[] = {"==", "!=", "<=", ">=", "->", "=>",
                                      "::", "&&", "||", "+=", "-=", "*=", "/="};
  while (i < n) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident(line[j])) ++j;
      tokens.push_back(line.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < n && (is_ident(line[j]) ||
                       (line[j] == '.' && j + 1 < n &&
                        std::isdigit(static_cast<unsigned char>(line[j + 1])))))
        ++j;
      tokens.push_back(line.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n) {
        if (line[j] == '\\' && j + 1 < n) {
          j += 2;
          continue;
        }
        if (line[j] == c) {
          ++j;
          break;
        }
        ++j;
      }
      // j stops one past the closing quote, or at end of line when unterminated.
      tokens.push_back(line.substr(i, j - i));
      i = j;
      continue;
    }
    if (i + 1 < n) {
      bool matched = false;
      for (const char* op : kTwoCharOps) {
        if (c == op[0] && line[i + 1] == op[1]) {
          tokens.push_back(op);
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    tokens.push_back(std::string(1, c));
    ++i;
  }
  return tokens;
}

Vocabulary::Vocabulary() {
  const char* specials[SpecialIds::kCount] = {kStartToken, kEndToken, kUnkToken,
                                              kNewFileToken, kAddMarker, kRemoveMarker};
  for (TokenId id = 0; id < SpecialIds::kCount; ++id) {
    token_to_id_.emplace(specials[id], id);
    id_to_token_.push_back(specials[id]);
    counts_.push_back(0);
  }
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sequences,
                             int min_count) {
  Vocabulary vocab;
  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& seq : sequences)
    for (const auto& tok : seq) ++freq[tok];

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, count] : freq) {
    auto it = vocab.token_to_id_.find(tok);
    if (it != vocab.token_to_id_.end()) {
      vocab.counts_[it->second] = count;  // special occurrences keep their fixed id
      continue;
    }
    if (count >= min_count) kept.emplace_back(tok, count);
  }
  if (kept.empty())
    throw EmptyCorpusError("no token reaches min_count=" + std::to_string(min_count));

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, count] : kept) {
    vocab.token_to_id_.emplace(tok, static_cast<TokenId>(vocab.id_to_token_.size()));
    vocab.id_to_token_.push_back(tok);
    vocab.counts_.push_back(count);
  }
  return vocab;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? SpecialIds::kUnk : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw BadIdError("token id " + std::to_string(id) + " out of range (vocab size " +
                     std::to_string(id_to_token_.size()) + ")");
  return id_to_token_[id];
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens,
                                        bool add_boundaries) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size() + (add_boundaries ? 2 : 0));
  if (add_boundaries) ids.push_back(SpecialIds::kStart);
  for (const auto& tok : tokens) ids.push_back(id_of(tok));
  if (add_boundaries) ids.push_back(SpecialIds::kEnd);
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) {
    const std::string& tok = token_of(id);
    if (id == SpecialIds::kStart || id == SpecialIds::kEnd) continue;
    tokens.push_back(tok);
  }
  return tokens;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file: " + path);
  for (std::size_t id = 0; id < id_to_token_.size(); ++id)
    out << id_to_token_[id] << '\t' << counts_[id] << '\n';
  if (!out) throw IoError("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary file: " + path);
  Vocabulary vocab;
  std::string line;
  TokenId id = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw IoError("bad vocabulary line: " + line);
    std::string tok = line.substr(0, tab);
    std::int64_t count = std::stoll(line.substr(tab + 1));
    if (id < SpecialIds::kCount) {
      if (tok != vocab.id_to_token_[id])
        throw IoError("vocabulary file special mismatch at id " + std::to_string(id) +
                      ": " + tok);
      vocab.counts_[id] = count;
    } else {
      vocab.token_to_id_.emplace(tok, id);
      vocab.id_to_token_.push_back(tok);
      vocab.counts_.push_back(count);
    }
    ++id;
  }
  if (id < SpecialIds::kCount) throw IoError("vocabulary file truncated: " + path);
  return vocab;
}

}  // namespace diffscribe
