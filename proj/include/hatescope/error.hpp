#pragma once

#include <stdexcept>
#include <string>

namespace hatescope {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A referenced node, user, task or annotator does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data violates a contract (malformed rows, out-of-range values).
class DataError : public Error {
public:
    using Error::Error;
};

/// Operands of incompatible shape (matrix/vector dimension mismatch).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage ran before the stage that produces its inputs.
class MissingArtifactError : public Error {
public:
    MissingArtifactError(const std::string& artifact, const std::string& producing_stage)
        : Error("missing artifact '" + artifact + "': run the '" + producing_stage + "' stage first"),
          artifact_(artifact), stage_(producing_stage) {}

    const std::string& artifact() const noexcept { return artifact_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string artifact_;
    std::string stage_;
};

}  // namespace hatescope
