#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mms {

// Base class for all library errors.
class MmsError : public std::runtime_error {
public:
    explicit MmsError(const std::string& message) : std::runtime_error(message) {}
};

// A unit composition with every fragment flag cleared.
class InvalidCompositionError : public MmsError {
public:
    using MmsError::MmsError;
};

// Vector dimensions disagree (query vs store, or store vs expected config).
class DimensionError : public MmsError {
public:
    using MmsError::MmsError;
};

// Bad argument to an operation (k < 1, n < 1, no samples, ...).
class ArgumentError : public MmsError {
public:
    using MmsError::MmsError;
};

// A network/backend call failed after exhausting retries.
class TransportError : public MmsError {
public:
    using MmsError::MmsError;
};

// Model output could not be parsed into fragments; keeps the raw text.
class ExtractionParseError : public MmsError {
public:
    ExtractionParseError(const std::string& message, std::string raw)
        : MmsError(message), raw_(std::move(raw)) {}

    const std::string& raw_output() const { return raw_; }

private:
    std::string raw_;
};

// Commit of a record whose id already exists with different content.
class ConflictError : public MmsError {
public:
    using MmsError::MmsError;
};

// Lookup of a record id that is not in the store.
class MissingRecordError : public MmsError {
public:
    using MmsError::MmsError;
};

// Store directory is unreadable, corrupt, or has a wrong version.
class StoreLoadError : public MmsError {
public:
    using MmsError::MmsError;
};

// A corpus file (LoCoMo layout) is malformed.
class CorpusLoadError : public MmsError {
public:
    using MmsError::MmsError;
};

// Chat backend returned an empty answer.
class EmptyAnswerError : public MmsError {
public:
    using MmsError::MmsError;
};

} // namespace mms
