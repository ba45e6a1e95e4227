#include "nutrisight/error.h"

#include <utility>

namespace nutrisight {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kGeometry: return "geometry";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kNoSubject: return "no_subject";
    case ErrorKind::kTopology: return "topology";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kProvider: return "provider";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kTraining: return "training";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kIngestion: return "ingestion";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kStorage: return "storage";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kUndefinedMetric: return "undefined_metric";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string message, std::string stage)
    : std::runtime_error(std::move(message)), kind_(kind), stage_(std::move(stage)) {}

Error Error::with_stage(std::string stage) const {
  if (!stage_.empty()) return *this;
  return Error(kind_, what(), std::move(stage));
}

void fail(ErrorKind kind, std::string message) { throw Error(kind, std::move(message)); }

}  // namespace nutrisight
