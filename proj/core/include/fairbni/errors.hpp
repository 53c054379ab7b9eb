#pragma once

#include <stdexcept>
#include <string>

namespace fairbni {

// Error taxonomy shared by the library and the CLI exit-code mapping.
enum class ErrorCode {
  validation,      // bad inputs, broken invariants, mismatched options
  dimension,       // shape mismatch between vectors/matrices
  parse,           // malformed file content
  degenerate_data, // data that makes an estimator undefined (empty subgroup, all-same treatment)
  singular,        // perfect separation / non-identifiable likelihood
  rank_deficient,  // collinear design, condition number past threshold
  calibration,     // intercept calibration failed to bracket/converge
  infeasible,      // no feasible point where feasibility was a precondition
  run,             // too many Monte Carlo replication failures
  internal,        // states that should be unreachable
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define FAIRBNI_DEFINE_ERROR(Name, code_value)                  \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what)                      \
        : Error(ErrorCode::code_value, what) {}                 \
  }

FAIRBNI_DEFINE_ERROR(ValidationError, validation);
FAIRBNI_DEFINE_ERROR(DimensionError, dimension);
FAIRBNI_DEFINE_ERROR(ParseError, parse);
FAIRBNI_DEFINE_ERROR(DegenerateDataError, degenerate_data);
FAIRBNI_DEFINE_ERROR(SingularityError, singular);
FAIRBNI_DEFINE_ERROR(RankDeficiencyError, rank_deficient);
FAIRBNI_DEFINE_ERROR(CalibrationError, calibration);
FAIRBNI_DEFINE_ERROR(InfeasibleError, infeasible);
FAIRBNI_DEFINE_ERROR(RunError, run);
FAIRBNI_DEFINE_ERROR(InternalError, internal);

#undef FAIRBNI_DEFINE_ERROR

}  // namespace fairbni
