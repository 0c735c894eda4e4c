#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffscribe {

struct RawCommit {
  std::string id;
  std::string message;    // full raw message; build uses the first line
  std::string diff_text;
  std::string author;
  std::int64_t timestamp = 0;  // seconds since epoch
};

// On-disk commit store: <dir>/metadata.tsv with one
// "id<TAB>author<TAB>timestamp<TAB>message" row per commit (message
// backslash-escaped so it stays single-line), plus <dir>/<id>.diff files.

std::string escape_tsv_field(const std::string& raw);
std::string unescape_tsv_field(const std::string& escaped);

void write_commit_store(const std::vector<RawCommit>& commits, const std::string& dir);
std::vector<RawCommit> load_commit_store(const std::string& dir);

struct ExtractStats {
  int commits = 0;
  int skipped_merges = 0;
};

// Reads the history of a local git clone (merge commits excluded) and writes
// the commit store layout above. Shells out to the git CLI.
ExtractStats extract_repo(const std::string& repo_path, const std::string& out_dir);

}  // namespace diffscribe
