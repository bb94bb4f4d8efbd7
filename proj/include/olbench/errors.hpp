#pragma once

#include <stdexcept>
#include <string>

namespace olbench {

// Data-level failures exit the CLI with code 1, configuration failures with 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Malformed content in an input file; message carries file and line.
class ParseError : public Error {
public:
    ParseError(const std::string& file, size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what) {}
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

class SourceUnavailableError : public Error {
public:
    using Error::Error;
};

class TaxonomyIntegrityError : public Error {
public:
    using Error::Error;
};

// A request exceeds what the data can supply (e.g. more negatives than candidates).
class CapacityError : public Error {
public:
    using Error::Error;
};

// Requesting a (task, source, family) combination no catalog defines is a
// caller mistake, so it maps to the configuration exit code.
class CatalogMissingError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class RenderError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public BackendError {
public:
    using BackendError::BackendError;
};

// Cross-referenced ids or recorded hashes that fail to line up.
class IntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace olbench
