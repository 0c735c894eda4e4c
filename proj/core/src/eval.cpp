#include "diffscribe/eval.hpp"

#include <fstream>

#include <json.hpp>

namespace diffscribe {

double token_accuracy(const std::vector<TokenId>& predicted,
                      const std::vector<TokenId>& target) {
  if (predicted.size() != target.size())
    throw LengthMismatchError("predicted has " + std::to_string(predicted.size()) +
                              " positions, target has " + std::to_string(target.size()));
  if (target.empty()) return 0.0;
  std::size_t matches = 0;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (predicted[i] == target[i]) ++matches;
  return static_cast<double>(matches) / static_cast<double>(target.size());
}

CorpusScore corpus_evaluate(std::vector<ScoredPair>& pairs) {
  if (pairs.empty()) throw EmptySetError("no pairs to evaluate");
  CorpusScore score;
  score.count = pairs.size();
  for (ScoredPair& pair : pairs) {
    pair.bleu4 = bleu4_sentence(pair.candidate, pair.reference);
    pair.meteor = meteor_exact(pair.candidate, pair.reference);
    score.mean_bleu4 += pair.bleu4;
    score.mean_meteor += pair.meteor;
  }
  score.mean_bleu4 /= static_cast<double>(score.count);
  score.mean_meteor /= static_cast<double>(score.count);
  return score;
}

void write_eval_report(const std::vector<ScoredPair>& pairs, const CorpusScore& score,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write evaluation report: " + path);
  for (const ScoredPair& pair : pairs) {
    nlohmann::json obj;
    obj["candidate"] = pair.candidate;
    obj["reference"] = pair.reference;
    obj["bleu4"] = pair.bleu4;
    obj["meteor"] = pair.meteor;
    out << obj.dump() << '\n';
  }
  nlohmann::json summary;
  summary["count"] = score.count;
  summary["mean_bleu4"] = score.mean_bleu4;
  summary["mean_meteor"] = score.mean_meteor;
  out << summary.dump() << '\n';
  if (!out) throw IoError("report write failed: " + path);
}

}  // namespace diffscribe
