#pragma once

#include <stdexcept>
#include <string>

namespace promptsearch {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration value. Carries the dotted field path that failed.
struct ConfigError : Error {
    ConfigError(std::string field_path, const std::string& what)
        : Error("config field '" + field_path + "': " + what), field(std::move(field_path)) {}
    std::string field;
};

/// Template registry problems: unknown name, unbound or disallowed placeholder.
struct TemplateError : Error {
    using Error::Error;
};

/// Dataset loading/validation failure. line = 1-based line number, 0 if not line-specific.
struct DatasetError : Error {
    DatasetError(const std::string& what, std::size_t line_no = 0)
        : Error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what), line(line_no) {}
    std::size_t line;
};

/// Evaluation contract violations (id mismatch, empty input).
struct EvalError : Error {
    using Error::Error;
};

/// Transport or backend failure after retries were exhausted.
struct GatewayError : Error {
    using Error::Error;
};

/// Replay backend had no fixture for the request digest.
struct ReplayMissError : GatewayError {
    explicit ReplayMissError(std::string digest_hex)
        : GatewayError("replay fixture miss for digest " + digest_hex), digest(std::move(digest_hex)) {}
    std::string digest;
};

/// Wire response did not match the chat-completion shape.
struct ProtocolError : GatewayError {
    using GatewayError::GatewayError;
};

/// Search-level contract violations (bad trajectory, expansion on a full-depth node, ...).
struct SearchError : Error {
    using Error::Error;
};

/// Expansion produced nothing usable; the tree is left unchanged.
struct ExpansionError : SearchError {
    using SearchError::SearchError;
};

/// Checkpoint file is structurally broken. Names the offending node/edge when known.
struct CheckpointError : Error {
    using Error::Error;
};

}  // namespace promptsearch
