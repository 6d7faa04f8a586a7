#pragma once

#include <stdexcept>
#include <string>

namespace branchpde {

/// Base class for all branchpde failures that map to CLI exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration: unknown preset, invalid field, schedule mismatch. Exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Invalid model data: negative density, pathological sampling target. Exit code 3.
struct ModelError : Error {
  using Error::Error;
};

/// Runtime blowup: non-finite state, population explosion, FD instability. Exit code 4.
struct BlowupError : Error {
  using Error::Error;
};

/// Filesystem / serialization failure. Exit code 5.
struct IoError : Error {
  using Error::Error;
};

}  // namespace branchpde
