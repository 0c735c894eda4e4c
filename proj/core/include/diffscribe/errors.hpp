#pragma once

#include <stdexcept>
#include <string>

namespace diffscribe {

// Diff text that violates the unified-diff grammar (e.g. hunk header counts
// disagreeing with the hunk body). Commits raising this are skipped, not fatal.
class MalformedDiffError : public std::runtime_error {
public:
  explicit MalformedDiffError(const std::string& what) : std::runtime_error(what) {}
};

// Commit whose diff contains no added or removed line under the requested variant.
class EmptyChangeError : public std::runtime_error {
public:
  explicit EmptyChangeError(const std::string& what) : std::runtime_error(what) {}
};

// No token survived the frequency threshold.
class EmptyCorpusError : public std::runtime_error {
public:
  explicit EmptyCorpusError(const std::string& what) : std::runtime_error(what) {}
};

// Token id outside the vocabulary / embedding table.
class BadIdError : public std::runtime_error {
public:
  explicit BadIdError(const std::string& what) : std::runtime_error(what) {}
};

// A split request that would leave some partition empty.
class TooFewExamplesError : public std::runtime_error {
public:
  explicit TooFewExamplesError(const std::string& what) : std::runtime_error(what) {}
};

// Checkpoint file with a bad version, truncated payload or mismatched shapes.
class CorruptCheckpointError : public std::runtime_error {
public:
  explicit CorruptCheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/inf gradient; the optimizer step is aborted and the matrix is named.
class NonFiniteGradientError : public std::runtime_error {
public:
  explicit NonFiniteGradientError(const std::string& what) : std::runtime_error(what) {}
};

// Config file with an unknown or ill-typed key.
class BadConfigError : public std::runtime_error {
public:
  explicit BadConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Prediction/target length disagreement before mask alignment.
class LengthMismatchError : public std::runtime_error {
public:
  explicit LengthMismatchError(const std::string& what) : std::runtime_error(what) {}
};

// Corpus evaluation over zero pairs.
class EmptySetError : public std::runtime_error {
public:
  explicit EmptySetError(const std::string& what) : std::runtime_error(what) {}
};

// I/O failures (unreadable commit store, unwritable report path, ...).
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diffscribe
