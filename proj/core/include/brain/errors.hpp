#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace brain {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A snapshot root is missing, unreadable, or yields no documents.
class IngestError : public Error {
  public:
    using Error::Error;
};

class EmptyCorpusError : public IngestError {
  public:
    using IngestError::IngestError;
};

/// Malformed or invalid bug-report dataset. line() is 1-based, 0 when not tied to a line.
class DatasetError : public Error {
  public:
    DatasetError(const std::string& message, std::size_t line)
        : Error(message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class IndexBuildError : public Error {
  public:
    using Error::Error;
};

/// A document id or index that is not present.
class LookupError : public Error {
  public:
    using Error::Error;
};

class QueryError : public Error {
  public:
    using Error::Error;
};

/// Corrupt, truncated or incompatible on-disk index snapshot.
class SnapshotError : public Error {
  public:
    using Error::Error;
};

/// Input outside the mathematical domain of an operation (empty graph, empty score list, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A caller broke a documented precondition (length mismatch, mixed documents, ...).
class ContractViolation : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// The relevance oracle could not produce a response after all retries.
class OracleUnavailableError : public Error {
  public:
    using Error::Error;
    OracleUnavailableError(const std::string& message, std::string doc_id, std::size_t segment_index)
        : Error(message), doc_id_(std::move(doc_id)), segment_index_(segment_index) {}

    /// Segment being judged when the oracle gave up; empty when not tied to one.
    const std::string& doc_id() const noexcept { return doc_id_; }
    std::size_t segment_index() const noexcept { return segment_index_; }

  private:
    std::string doc_id_;
    std::size_t segment_index_ = 0;
};

/// The endpoint rejected the credentials (HTTP 401/403).
class OracleAuthError : public OracleUnavailableError {
  public:
    using OracleUnavailableError::OracleUnavailableError;
};

}  // namespace brain
