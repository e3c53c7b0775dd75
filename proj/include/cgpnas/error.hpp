#pragma once

#include <stdexcept>
#include <string>

namespace cgpnas {

/// Invalid configuration values (grid, evolution, data, run config).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A genotype references a function that the active catalog does not enable.
class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the evolve loop when the evaluator throws; carries the
/// serialized genotype that was being scored.
class EvaluationAborted : public std::runtime_error {
public:
    EvaluationAborted(const std::string& what, std::string genotype_json)
        : std::runtime_error(what), genotype_json_(std::move(genotype_json)) {}

    const std::string& genotype_json() const noexcept { return genotype_json_; }

private:
    std::string genotype_json_;
};

} // namespace cgpnas
