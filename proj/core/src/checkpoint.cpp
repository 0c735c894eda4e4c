#include "diffscribe/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "diffscribe/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace diffscribe {
namespace {

constexpr const char* kMagic = "diffscribe-checkpoint v1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix(std::ofstream& out, const Mat<float>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(float));
    }
}

void write_matrix(std::ofstream& out, const Vec<float>& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
}

void read_matrix(std::ifstream& in, Mat<float>& m) {
  std::vector<float> buf(static_cast<std::size_t>(m.rows() * m.cols()));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw CorruptCheckpointError("checkpoint payload truncated");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = buf[k++];
}

void read_matrix(std::ifstream& in, Vec<float>& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (!in) throw CorruptCheckpointError("checkpoint payload truncated");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const HyperParams& h = ckpt.hyper;
  out << kMagic << '\n';
  out << "hyper " << h.d_hidden << ' ' << h.d_embed << ' ' << format_double(h.dropout_p)
      << ' ' << format_double(h.learning_rate) << ' ' << format_double(h.grad_clip) << ' '
      << h.batch_size << ' ' << h.max_epochs << ' ' << h.seed << '\n';
  out << "vocab " << ckpt.nl_vocab << ' ' << ckpt.code_vocab << '\n';
  out << "history " << ckpt.history.size() << '\n';
  for (const EpochRecord& e : ckpt.history)
    out << "epoch " << e.epoch << ' ' << format_double(e.train_nll) << ' '
        << format_double(e.val_accuracy) << ' ' << format_double(e.val_meteor) << ' '
        << format_double(e.val_nll) << '\n';
  out << "end_header\n";

  visit_params(ckpt.params, [&](const char*, const auto& m) { write_matrix(out, m); });
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw CorruptCheckpointError("bad checkpoint magic in " + path);

  Checkpoint ckpt;
  bool saw_hyper = false, saw_vocab = false;
  std::size_t history_left = 0;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "hyper") {
      HyperParams& h = ckpt.hyper;
      ss >> h.d_hidden >> h.d_embed >> h.dropout_p >> h.learning_rate >> h.grad_clip >>
          h.batch_size >> h.max_epochs >> h.seed;
      saw_hyper = !ss.fail();
    } else if (key == "vocab") {
      ss >> ckpt.nl_vocab >> ckpt.code_vocab;
      saw_vocab = !ss.fail();
    } else if (key == "history") {
      ss >> history_left;
    } else if (key == "epoch") {
      if (history_left == 0) throw CorruptCheckpointError("unexpected epoch line");
      EpochRecord e;
      ss >> e.epoch >> e.train_nll >> e.val_accuracy >> e.val_meteor >> e.val_nll;
      if (ss.fail()) throw CorruptCheckpointError("bad epoch line: " + line);
      ckpt.history.push_back(e);
      --history_left;
    } else {
      throw CorruptCheckpointError("unknown checkpoint header line: " + line);
    }
  }
  if (!saw_hyper || !saw_vocab || history_left != 0)
    throw CorruptCheckpointError("incomplete checkpoint header in " + path);
  if (ckpt.nl_vocab < 1 || ckpt.code_vocab < 1 || ckpt.hyper.d_hidden < 1 ||
      ckpt.hyper.d_embed < 1)
    throw CorruptCheckpointError("non-positive shape in checkpoint header");

  const ModelDims dims{ckpt.nl_vocab, ckpt.code_vocab, ckpt.hyper.d_embed,
                       ckpt.hyper.d_hidden};
  ckpt.params = ParamsF::zeros(dims);
  visit_params(ckpt.params, [&](const char*, auto& m) { read_matrix(in, m); });

  char extra;
  if (in.read(&extra, 1))
    throw CorruptCheckpointError("trailing bytes after checkpoint payload");
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, int expect_nl_vocab,
                           int expect_code_vocab) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.nl_vocab != expect_nl_vocab || ckpt.code_vocab != expect_code_vocab)
    throw CorruptCheckpointError(
        "checkpoint vocabulary sizes (" + std::to_string(ckpt.nl_vocab) + ", " +
        std::to_string(ckpt.code_vocab) + ") do not match expected (" +
        std::to_string(expect_nl_vocab) + ", " + std::to_string(expect_code_vocab) + ")");
  return ckpt;
}

}  // namespace diffscribe
