#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffscribe {

enum class LineKind { Added, Removed, Context };

// One '+', '-' or ' ' line inside a hunk, text kept verbatim (prefix stripped).
struct ChangeLine {
  LineKind kind = LineKind::Context;
  std::string text;
};

// One "@@ -a,b +c,d @@" section.
struct Hunk {
  std::uint64_t old_start = 0;
  std::uint64_t old_len = 0;
  std::uint64_t new_start = 0;
  std::uint64_t new_len = 0;
  std::vector<ChangeLine> lines;
};

// All hunks touching one file. Paths are as given by the diff header;
// "/dev/null" marks creation/deletion sides.
struct FileDiff {
  std::string old_path;
  std::string new_path;
  std::vector<Hunk> hunks;
};

struct ParsedDiff {
  std::vector<FileDiff> files;
  // File sections declared binary ("Binary files ... differ" / "GIT binary
  // patch"). They carry no hunks; commits containing any are skipped upstream.
  int binary_files = 0;
};

// Parses unified-diff text into per-file hunk lists. Non-diff preamble
// (commit headers, "index ..." lines, mode lines) is ignored. Throws
// MalformedDiffError when a hunk body disagrees with its header counts.
ParsedDiff parse_diff(const std::string& diff_text);

// Same, returning just the file list.
std::vector<FileDiff> parse_unified_diff(const std::string& diff_text);

enum class ChangeKind { AddOnly, RemoveOnly, Mixed };

struct CommitClass {
  bool atomic = false;
  ChangeKind kind = ChangeKind::Mixed;
};

// atomic <=> exactly one file; AddOnly <=> no removed line and at least one
// added; RemoveOnly symmetric; anything else (including no change lines) Mixed.
CommitClass classify_commit(const std::vector<FileDiff>& files);

enum class DatasetVariant { Atomic, Full, UniActionAdd, UniActionRemove };

std::string to_string(DatasetVariant v);
DatasetVariant variant_from_string(const std::string& name);

// Marker tokens prepended to every changed line, and the delimiter inserted
// between lines of different files under the Full variant.
inline constexpr const char* kAddMarker = "<add>";
inline constexpr const char* kRemoveMarker = "<rem>";
inline constexpr const char* kNewFileToken = "NEW_FILE";

// Flattens the changed lines of a commit into [marker, raw line, ...] order,
// context lines excluded. Under Full a NEW_FILE token separates files; under
// UniAction* only the matching kind is present. Throws EmptyChangeError when
// nothing remains.
std::vector<std::string> extract_change_sequence(const std::vector<FileDiff>& files,
                                                 DatasetVariant variant);

}  // namespace diffscribe
