#pragma once

#include <stdexcept>
#include <string>

namespace teamdiag {

enum class ErrorCode {
  // model construction / evaluation
  CyclicDependency,
  UndeclaredVariable,
  DuplicateEquation,
  MissingEquation,
  PartialContext,
  InvalidArgument,
  // cause search
  CandidateViolation,
  SearchBudgetExceeded,
  NotMonotone,
  NotConjunctive,
  PolarityMismatch,
  NoCauseInCandidateSet,
  CandidateNotIndependent,
  // plans
  UnknownTask,
  UnknownLiteral,
  PreconditionCapExceeded,
  UnestablishableLiteral,
  PlanDoesNotAchieveGoal,
  PartialIntentions,
  // diagnosis
  InconsistentObservation,
  EnumerationBudgetExceeded,
  PlanDidNotFail,
  ZeroProbabilityMass,
  // i/o
  ParseError,
};

const char* to_string(ErrorCode code);

/// Library-wide exception: a code for programmatic handling plus a
/// human-readable message naming the offending entity.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace teamdiag
