#pragma once

#include <stdexcept>
#include <string>

namespace pfem {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or otherwise out-of-domain input to a geometric primitive.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Exactly collinear (zero-area) triangle where a proper one is required.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// Two points closer than the duplicate tolerance.
class DuplicatePointError : public Error {
public:
    using Error::Error;
};

/// Constrained edges cross each other or an existing constraint.
class ConstraintConflictError : public Error {
public:
    using Error::Error;
};

/// Point location failed (outside the triangulated domain).
class LocationError : public Error {
public:
    using Error::Error;
};

/// Self-intersecting or otherwise malformed boundary loop.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// Mesh adaptation exceeded its iteration cap.
class RefinementStalledError : public Error {
public:
    using Error::Error;
};

/// Non-finite entry produced during finite element assembly.
class AssemblyError : public Error {
public:
    using Error::Error;
};

/// Linear solve failed (singular matrix, unreduced null space, ...).
class SolverError : public Error {
public:
    using Error::Error;
};

/// Velocity projection target lies too far outside the previous fluid domain.
class ProjectionError : public Error {
public:
    using Error::Error;
};

/// Time step violates the CFL bound under cfl_policy = error.
class CflError : public Error {
public:
    using Error::Error;
};

/// Bad configuration file; carries the offending line number when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

} // namespace pfem
