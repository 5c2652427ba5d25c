#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace funscreen {

// Every failure surfaced to callers derives from Error. The category string is
// stable so the CLI can emit one-line machine-parsable diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(category + ": " + message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

// Malformed input files: bad CSV cells, ragged rows, unparsable manifests.
struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error("format", m) {}
};

// Shape mismatches between matrices, designs and curve ensembles.
struct DimensionError : Error {
    explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

// Values outside an operation's domain: non-finite entries, bad coding,
// aliased effects, zero distances where positive ones are required.
struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain", m) {}
};

// Design construction requests that cannot be satisfied.
struct ConstructionError : Error {
    explicit ConstructionError(const std::string& m) : Error("construction", m) {}
};

// Rank deficiencies that make a decomposition or solve impossible.
struct RankError : Error {
    explicit RankError(const std::string& m) : Error("rank", m) {}
};

// Bad CLI/config input: unknown keys, missing files, invalid combinations.
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// Filesystem failures.
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace funscreen
