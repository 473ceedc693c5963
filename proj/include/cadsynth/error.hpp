#pragma once

#include <stdexcept>
#include <string>

namespace cadsynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with user-supplied data or configuration. The CLI maps these to
// exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedMesh : public DataError {
 public:
  using DataError::DataError;
};

class MalformedTexture : public DataError {
 public:
  using DataError::DataError;
};

class AssetMissing : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class UnknownParameter : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidScene : public DataError {
 public:
  using DataError::DataError;
};

class PlacementFailure : public DataError {
 public:
  using DataError::DataError;
};

class CameraConstraintFailure : public DataError {
 public:
  using DataError::DataError;
};

class MalformedAnnotation : public DataError {
 public:
  using DataError::DataError;
};

class MalformedDetections : public DataError {
 public:
  using DataError::DataError;
};

class MissingImageAnnotation : public DataError {
 public:
  using DataError::DataError;
};

class IoFailure : public DataError {
 public:
  using DataError::DataError;
};

class GenerationFailure : public DataError {
 public:
  using DataError::DataError;
};

// The external detector did not honour its contract (exit code 3 at the CLI).
class DetectorFailure : public Error {
 public:
  DetectorFailure(const std::string& what, int exit_code)
      : Error(what), exit_code_(exit_code) {}

  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

}  // namespace cadsynth
