#pragma once

#include <stdexcept>
#include <string>

namespace intentran {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define INTENTRAN_ERROR(Name)                \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

INTENTRAN_ERROR(ConfigurationError);
INTENTRAN_ERROR(DomainError);
INTENTRAN_ERROR(ContractViolation);

// intent processing
INTENTRAN_ERROR(BackendUnavailable);
INTENTRAN_ERROR(BackendMisbehavior);
INTENTRAN_ERROR(ParseFailure);
INTENTRAN_ERROR(UnintelligibleIntent);

// validation
INTENTRAN_ERROR(InsufficientHistory);
INTENTRAN_ERROR(DegenerateMeasurement);

// orchestration
INTENTRAN_ERROR(DegenerateBaseline);
INTENTRAN_ERROR(DegenerateGoal);
INTENTRAN_ERROR(ScorerUnavailable);
INTENTRAN_ERROR(TrainingDegenerate);
INTENTRAN_ERROR(AppDisabled);

// service
INTENTRAN_ERROR(ServiceUnavailable);
INTENTRAN_ERROR(NotFound);

#undef INTENTRAN_ERROR

}  // namespace intentran
