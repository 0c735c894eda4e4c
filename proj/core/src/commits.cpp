#include "diffscribe/commits.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffscribe/errors.hpp"

namespace fs = std::filesystem;

namespace diffscribe {
namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

std::string run_command(const std::string& cmd) {
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw IoError("cannot run command: " + cmd);
  std::string output;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
  int status = pclose(pipe);
  if (status != 0)
    throw IoError("command failed (status " + std::to_string(status) + "): " + cmd);
  return output;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string escape_tsv_field(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_tsv_field(const std::string& escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] != '\\' || i + 1 == escaped.size()) {
      out += escaped[i];
      continue;
    }
    switch (escaped[++i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += escaped[i];
    }
  }
  return out;
}

void write_commit_store(const std::vector<RawCommit>& commits, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream meta(fs::path(dir) / "metadata.tsv", std::ios::binary);
  if (!meta) throw IoError("cannot write metadata.tsv under " + dir);
  for (const RawCommit& c : commits) {
    if (c.id.empty()) throw IoError("commit with empty id");
    meta << c.id << '\t' << escape_tsv_field(c.author) << '\t' << c.timestamp << '\t'
         << escape_tsv_field(c.message) << '\n';
    std::ofstream diff(fs::path(dir) / (c.id + ".diff"), std::ios::binary);
    if (!diff) throw IoError("cannot write diff for commit " + c.id);
    diff << c.diff_text;
  }
}

std::vector<RawCommit> load_commit_store(const std::string& dir) {
  const fs::path meta_path = fs::path(dir) / "metadata.tsv";
  std::ifstream meta(meta_path, std::ios::binary);
  if (!meta) throw IoError("cannot read " + meta_path.string());
  std::vector<RawCommit> commits;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      auto tab = line.find('\t', pos);
      if (tab == std::string::npos) throw IoError("bad metadata row: " + line);
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    fields.push_back(line.substr(pos));

    RawCommit c;
    c.id = fields[0];
    c.author = unescape_tsv_field(fields[1]);
    c.timestamp = std::stoll(fields[2]);
    c.message = unescape_tsv_field(fields[3]);
    c.diff_text = read_file(fs::path(dir) / (c.id + ".diff"));
    commits.push_back(std::move(c));
  }
  return commits;
}

ExtractStats extract_repo(const std::string& repo_path, const std::string& out_dir) {
  const std::string repo = shell_quote(repo_path);
  // %x1e separates records, %x1f separates fields; %B is the raw message.
  const std::string log = run_command("git -C " + repo +
                                      " log --no-merges --format='%H%x1f%at%x1f%an%x1f%B%x1e'");
  const std::string all =
      run_command("git -C " + repo + " rev-list --count HEAD 2>/dev/null || echo 0");

  std::vector<RawCommit> commits;
  std::size_t pos = 0;
  while (pos < log.size()) {
    auto rec_end = log.find('\x1e', pos);
    if (rec_end == std::string::npos) break;
    std::string record = log.substr(pos, rec_end - pos);
    pos = rec_end + 1;
    while (pos < log.size() && log[pos] == '\n') ++pos;

    std::vector<std::string> fields;
    std::size_t fpos = 0;
    for (int k = 0; k < 3; ++k) {
      auto sep = record.find('\x1f', fpos);
      if (sep == std::string::npos) throw IoError("unexpected git log record: " + record);
      fields.push_back(record.substr(fpos, sep - fpos));
      fpos = sep + 1;
    }
    fields.push_back(record.substr(fpos));

    RawCommit c;
    c.id = fields[0];
    c.timestamp = std::stoll(fields[1]);
    c.author = fields[2];
    c.message = fields[3];
    while (!c.message.empty() && c.message.back() == '\n') c.message.pop_back();
    c.diff_text = run_command("git -C " + repo +
                              " diff-tree --root --no-commit-id --patch --no-color " +
                              shell_quote(c.id));
    commits.push_back(std::move(c));
  }

  // Oldest first so downstream ordering by (timestamp, id) matches history.
  std::reverse(commits.begin(), commits.end());
  write_commit_store(commits, out_dir);

  ExtractStats stats;
  stats.commits = static_cast<int>(commits.size());
  int total = 0;
  try {
    total = std::stoi(all);
  } catch (...) {
    total = stats.commits;
  }
  stats.skipped_merges = std::max(0, total - stats.commits);
  return stats;
}

}  // namespace diffscribe
