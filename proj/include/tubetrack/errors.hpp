#pragma once

#include <stdexcept>
#include <string>

namespace tubetrack {

// Bad configuration values: out-of-range thresholds, impossible anchor shapes,
// infeasible scenes. Messages name the offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. Messages carry a line number or byte offset.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Least-squares fit with too few usable samples or a rank-deficient design.
class UnderdeterminedError : public std::runtime_error {
public:
    explicit UnderdeterminedError(const std::string& what) : std::runtime_error(what) {}
};

// Windows fed to the tracker out of order, or against a stale frontier.
class SequencingError : public std::logic_error {
public:
    explicit SequencingError(const std::string& what) : std::logic_error(what) {}
};

// A contract between pipeline stages was broken by the caller (e.g. a positive
// anchor with no ground-truth encoding).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace tubetrack
