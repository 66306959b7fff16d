#pragma once

#include <stdexcept>
#include <string>

namespace safetriage {

/// Base class for every error raised by the library. The concrete type names
/// the failure category so callers (CLI, HTTP layer) can map it to an exit
/// code or status without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SAFETRIAGE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

// corpus
SAFETRIAGE_ERROR(IngestError);
SAFETRIAGE_ERROR(EmptyDatasetError);
SAFETRIAGE_ERROR(MergeError);
// general argument / configuration problems
SAFETRIAGE_ERROR(ArgumentError);
SAFETRIAGE_ERROR(ConfigError);
// features / selection / classifiers
SAFETRIAGE_ERROR(FitError);
SAFETRIAGE_ERROR(TrainingError);
SAFETRIAGE_ERROR(PipelineError);
SAFETRIAGE_ERROR(ShapeError);
SAFETRIAGE_ERROR(SelectionError);
SAFETRIAGE_ERROR(DataError);
SAFETRIAGE_ERROR(ThresholdError);
SAFETRIAGE_ERROR(FormatError);
// evaluation
SAFETRIAGE_ERROR(PlanError);
SAFETRIAGE_ERROR(InputError);
SAFETRIAGE_ERROR(StatTestError);
// service
SAFETRIAGE_ERROR(NotFoundError);
SAFETRIAGE_ERROR(ConflictError);
SAFETRIAGE_ERROR(UnavailableError);

#undef SAFETRIAGE_ERROR

}  // namespace safetriage
