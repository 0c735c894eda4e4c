#include "diffscribe/diff.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>

#include "diffscribe/errors.hpp"

namespace diffscribe {
namespace {

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

// Structural lines may carry a trailing '\r'; hunk body content is kept verbatim.
std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

// "a/src/x.py" -> "src/x.py"; "/dev/null" stays. Traditional diffs append a
// tab plus timestamp after the path.
std::string clean_path(const std::string& raw, char side) {
  std::string p = strip_cr(raw);
  if (auto tab = p.find('\t'); tab != std::string::npos) p.resize(tab);
  if (p == "/dev/null") return p;
  std::string prefix{side, '/'};
  if (starts_with(p, prefix.c_str())) p.erase(0, 2);
  return p;
}

struct HunkHeader {
  std::uint64_t old_start, old_len, new_start, new_len;
};

// "@@ -a[,b] +c[,d] @@ ...". Omitted lengths default to 1.
std::optional<HunkHeader> parse_hunk_header(const std::string& line) {
  const char* p = line.c_str();
  auto expect = [&](char c) {
    if (*p != c) return false;
    ++p;
    return true;
  };
  auto number = [&](std::uint64_t& out) {
    if (!std::isdigit(static_cast<unsigned char>(*p))) return false;
    char* end = nullptr;
    out = std::strtoull(p, &end, 10);
    p = end;
    return true;
  };
  HunkHeader h{0, 1, 0, 1};
  if (!expect('@') || !expect('@') || !expect(' ') || !expect('-')) return std::nullopt;
  if (!number(h.old_start)) return std::nullopt;
  if (*p == ',') {
    ++p;
    if (!number(h.old_len)) return std::nullopt;
  }
  if (!expect(' ') || !expect('+')) return std::nullopt;
  if (!number(h.new_start)) return std::nullopt;
  if (*p == ',') {
    ++p;
    if (!number(h.new_len)) return std::nullopt;
  }
  if (!expect(' ') || !expect('@') || !expect('@')) return std::nullopt;
  return h;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

ParsedDiff parse_diff(const std::string& diff_text) {
  ParsedDiff out;
  FileDiff current;
  bool in_file = false;
  bool current_binary = false;

  auto flush_file = [&]() {
    if (in_file && !current.hunks.empty()) {
      if (current.old_path.empty()) current.old_path = current.new_path;
      if (current.new_path.empty()) current.new_path = current.old_path;
      out.files.push_back(std::move(current));
    }
    current = FileDiff{};
    in_file = false;
    current_binary = false;
  };

  const std::vector<std::string> lines = split_lines(diff_text);
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string structural = strip_cr(lines[i]);

    if (starts_with(structural, "diff ")) {
      flush_file();
      in_file = true;
      ++i;
      continue;
    }
    if (starts_with(structural, "Binary files ") || structural == "GIT binary patch") {
      if (!current_binary) {
        ++out.binary_files;
        current_binary = true;
      }
      in_file = true;
      ++i;
      continue;
    }
    if (starts_with(structural, "--- ")) {
      // A new header after completed hunks starts the next file section in
      // plain (non-git) multi-file diffs.
      if (!current.hunks.empty()) flush_file();
      in_file = true;
      current.old_path = clean_path(structural.substr(4), 'a');
      ++i;
      continue;
    }
    if (starts_with(structural, "+++ ")) {
      in_file = true;
      current.new_path = clean_path(structural.substr(4), 'b');
      ++i;
      continue;
    }
    if (starts_with(structural, "@@")) {
      auto header = parse_hunk_header(structural);
      if (!header) throw MalformedDiffError("bad hunk header: " + structural);
      if (!in_file || (current.old_path.empty() && current.new_path.empty()))
        throw MalformedDiffError("hunk header before any file header");

      Hunk hunk;
      hunk.old_start = header->old_start;
      hunk.old_len = header->old_len;
      hunk.new_start = header->new_start;
      hunk.new_len = header->new_len;
      std::uint64_t old_left = header->old_len;
      std::uint64_t new_left = header->new_len;
      ++i;
      while (old_left > 0 || new_left > 0) {
        if (i >= lines.size())
          throw MalformedDiffError("diff truncated inside hunk body");
        const std::string& body = lines[i];
        const char prefix = body.empty() ? ' ' : body[0];
        if (prefix == '\\') {
          // "\ No newline at end of file": annotation, not a counted line.
          ++i;
          continue;
        }
        std::string text = body.empty() ? std::string() : body.substr(1);
        switch (prefix) {
          case ' ':
            if (old_left == 0 || new_left == 0)
              throw MalformedDiffError("hunk body exceeds header counts");
            --old_left;
            --new_left;
            hunk.lines.push_back({LineKind::Context, std::move(text)});
            break;
          case '-':
            if (old_left == 0)
              throw MalformedDiffError("hunk body exceeds old-side count");
            --old_left;
            hunk.lines.push_back({LineKind::Removed, std::move(text)});
            break;
          case '+':
            if (new_left == 0)
              throw MalformedDiffError("hunk body exceeds new-side count");
            --new_left;
            hunk.lines.push_back({LineKind::Added, std::move(text)});
            break;
          default:
            throw MalformedDiffError("unexpected line inside hunk body: " + body);
        }
        ++i;
      }
      current.hunks.push_back(std::move(hunk));
      continue;
    }
    // Preamble and metadata (commit headers, "index ...", mode lines, rename
    // markers) carry no line-level content.
    ++i;
  }
  flush_file();
  return out;
}

std::vector<FileDiff> parse_unified_diff(const std::string& diff_text) {
  return parse_diff(diff_text).files;
}

CommitClass classify_commit(const std::vector<FileDiff>& files) {
  CommitClass cls;
  cls.atomic = files.size() == 1;
  std::size_t added = 0, removed = 0;
  for (const FileDiff& f : files)
    for (const Hunk& h : f.hunks)
      for (const ChangeLine& l : h.lines) {
        if (l.kind == LineKind::Added) ++added;
        if (l.kind == LineKind::Removed) ++removed;
      }
  if (added > 0 && removed == 0)
    cls.kind = ChangeKind::AddOnly;
  else if (removed > 0 && added == 0)
    cls.kind = ChangeKind::RemoveOnly;
  else
    cls.kind = ChangeKind::Mixed;
  return cls;
}

std::string to_string(DatasetVariant v) {
  switch (v) {
    case DatasetVariant::Atomic: return "atomic";
    case DatasetVariant::Full: return "full";
    case DatasetVariant::UniActionAdd: return "uniaction-add";
    case DatasetVariant::UniActionRemove: return "uniaction-remove";
  }
  return "atomic";
}

DatasetVariant variant_from_string(const std::string& name) {
  if (name == "atomic") return DatasetVariant::Atomic;
  if (name == "full") return DatasetVariant::Full;
  if (name == "uniaction-add") return DatasetVariant::UniActionAdd;
  if (name == "uniaction-remove") return DatasetVariant::UniActionRemove;
  throw BadConfigError("unknown dataset variant: " + name);
}

std::vector<std::string> extract_change_sequence(const std::vector<FileDiff>& files,
                                                 DatasetVariant variant) {
  std::vector<std::string> seq;
  bool emitted_any_file = false;
  for (const FileDiff& f : files) {
    std::vector<std::string> file_seq;
    for (const Hunk& h : f.hunks) {
      for (const ChangeLine& l : h.lines) {
        if (l.kind == LineKind::Added && variant != DatasetVariant::UniActionRemove) {
          file_seq.push_back(kAddMarker);
          file_seq.push_back(l.text);
        } else if (l.kind == LineKind::Removed &&
                   variant != DatasetVariant::UniActionAdd) {
          file_seq.push_back(kRemoveMarker);
          file_seq.push_back(l.text);
        }
      }
    }
    if (file_seq.empty()) continue;
    if (emitted_any_file && variant == DatasetVariant::Full)
      seq.push_back(kNewFileToken);
    seq.insert(seq.end(), std::make_move_iterator(file_seq.begin()),
               std::make_move_iterator(file_seq.end()));
    emitted_any_file = true;
  }
  if (seq.empty()) throw EmptyChangeError("commit has no added or removed lines");
  return seq;
}

}  // namespace diffscribe
