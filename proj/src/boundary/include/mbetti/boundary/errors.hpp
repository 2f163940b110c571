#pragma once

#include <stdexcept>
#include <string>

namespace mbetti {

/// Base class of every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI when writing errors.json.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& w) : Error("validation", w) {}
};
struct OrientationError : Error {
    explicit OrientationError(const std::string& w) : Error("orientation", w) {}
};
struct GeometryError : Error {
    explicit GeometryError(const std::string& w) : Error("geometry", w) {}
};
struct ResourceError : Error {
    explicit ResourceError(const std::string& w) : Error("resource", w) {}
};
struct ConstructionError : Error {
    explicit ConstructionError(const std::string& w) : Error("construction", w) {}
};
struct MaterialError : Error {
    explicit MaterialError(const std::string& w) : Error("material", w) {}
};
struct ResolutionError : Error {
    explicit ResolutionError(const std::string& w) : Error("resolution", w) {}
};
struct SolverError : Error {
    explicit SolverError(const std::string& w) : Error("solver", w) {}
};
struct DatasetError : Error {
    explicit DatasetError(const std::string& w) : Error("dataset", w) {}
};
struct DomainOfDependenceError : Error {
    explicit DomainOfDependenceError(const std::string& w) : Error("domain_of_dependence", w) {}
};
struct AmbiguousRankError : Error {
    explicit AmbiguousRankError(const std::string& w) : Error("ambiguous_rank", w) {}
};
struct SpectralGapError : Error {
    explicit SpectralGapError(const std::string& w) : Error("spectral_gap", w) {}
};
struct ConsistencyError : Error {
    explicit ConsistencyError(const std::string& w) : Error("consistency", w) {}
};

} // namespace mbetti
