#pragma once

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>

#include "teamdiag/compile.hpp"
#include "teamdiag/diagnose.hpp"
#include "teamdiag/rational.hpp"

namespace teamdiag::cli {

/// Rationals render with exact numerator/denominator plus a 6-place decimal;
/// the decimal is display-only.
nlohmann::json rational_json(const Rational& r);
std::string rational_text(const Rational& r);

struct ReportInputs {
  const plan::PlanModelBinding* binding = nullptr;
  const diag::DiagnosisResult* result = nullptr;
  /// Optional per-context cause lists over all endogenous variables
  /// (--candidates all); empty otherwise.
  std::vector<std::vector<hp::CauseWithWitness>> debug_causes;
  bool show_debug_causes = false;
  long compile_ms = 0;
  long diagnose_ms = 0;
};

nlohmann::json report_json(const ReportInputs& in);
void report_text(std::ostream& os, const ReportInputs& in);

}  // namespace teamdiag::cli
