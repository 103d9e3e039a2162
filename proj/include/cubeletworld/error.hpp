#pragma once

#include <stdexcept>
#include <string>

namespace cubeletworld {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An index or coordinate outside the owning grid.
class BoundsError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-contract input data.
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Corrupt or truncated file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Boids could not be placed outside the terrain.
class PlacementError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage ran before the stage producing its input.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

}  // namespace cubeletworld
