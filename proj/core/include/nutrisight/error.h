#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nutrisight {

// Failure categories shared by every pipeline stage. The service maps them to
// HTTP status classes and the CLI maps them to exit codes.
enum class ErrorKind {
  kParameter,      // invalid argument value
  kGeometry,       // point outside bounds, degenerate landmark set
  kDegenerate,     // collinear / coincident input
  kNoSubject,      // empty mask, blank image
  kTopology,       // non-watertight or empty mesh
  kContract,       // modality mismatch between input and provider
  kProvider,       // provider unavailable or failed
  kData,           // non-finite or malformed data
  kNumeric,        // non-finite intermediate during computation
  kTraining,       // divergence
  kFormat,         // corrupt or version-mismatched file
  kIngestion,      // manifest schema violation
  kConfiguration,  // missing calibration / provider / model
  kValidation,     // request or CLI argument validation
  kNotFound,
  kStorage,
  kInfeasible,     // nutrition plan below safety floor
  kUndefinedMetric,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string stage = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  // Returns a copy tagged with the pipeline stage that raised it, unless a
  // stage is already attached.
  Error with_stage(std::string stage) const;

 private:
  ErrorKind kind_;
  std::string stage_;
};

[[noreturn]] void fail(ErrorKind kind, std::string message);

}  // namespace nutrisight
