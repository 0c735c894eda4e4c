#pragma once

#include <string>
#include <vector>

#include "diffscribe/model.hpp"

namespace diffscribe {

// Per-epoch metrics kept in the checkpoint header (wall-clock time is
// deliberately absent so identical runs produce identical files).
struct EpochRecord {
  int epoch = 0;
  double train_nll = 0;      // mean per target token
  double val_accuracy = 0;   // teacher-forced next-token accuracy
  double val_meteor = 0;
  double val_nll = 0;
};

struct Checkpoint {
  HyperParams hyper;
  int nl_vocab = 0;
  int code_vocab = 0;
  std::vector<EpochRecord> history;
  ParamsF params;
};

// Layout: a text header
//   diffscribe-checkpoint v1
//   hyper <d_hidden> <d_embed> <dropout_p> <learning_rate> <grad_clip>
//         <batch_size> <max_epochs> <seed>
//   vocab <nl_vocab> <code_vocab>
//   history <n>            (then n "epoch <i> <train_nll> <acc> <meteor> <val_nll>" lines)
//   end_header
// followed by the parameter matrices as little-endian float32, row-major, in
// the order nl_embed, code_embed, lstm_wx, lstm_wh, lstm_bias, out_proj,
// comb_hidden, comb_attn.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Throws CorruptCheckpointError on version, shape or size mismatch.
Checkpoint load_checkpoint(const std::string& path);

// Same, also requiring the stored vocabulary sizes to match.
Checkpoint load_checkpoint(const std::string& path, int expect_nl_vocab,
                           int expect_code_vocab);

}  // namespace diffscribe
