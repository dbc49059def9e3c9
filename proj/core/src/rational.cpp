#include "teamdiag/rational.hpp"

#include <cctype>
#include <ostream>

#include "teamdiag/error.hpp"

namespace teamdiag {

namespace mp = boost::multiprecision;

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CyclicDependency: return "CyclicDependency";
    case ErrorCode::UndeclaredVariable: return "UndeclaredVariable";
    case ErrorCode::DuplicateEquation: return "DuplicateEquation";
    case ErrorCode::MissingEquation: return "MissingEquation";
    case ErrorCode::PartialContext: return "PartialContext";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CandidateViolation: return "CandidateViolation";
    case ErrorCode::SearchBudgetExceeded: return "SearchBudgetExceeded";
    case ErrorCode::NotMonotone: return "NotMonotone";
    case ErrorCode::NotConjunctive: return "NotConjunctive";
    case ErrorCode::PolarityMismatch: return "PolarityMismatch";
    case ErrorCode::NoCauseInCandidateSet: return "NoCauseInCandidateSet";
    case ErrorCode::CandidateNotIndependent: return "CandidateNotIndependent";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::UnknownLiteral: return "UnknownLiteral";
    case ErrorCode::PreconditionCapExceeded: return "PreconditionCapExceeded";
    case ErrorCode::UnestablishableLiteral: return "UnestablishableLiteral";
    case ErrorCode::PlanDoesNotAchieveGoal: return "PlanDoesNotAchieveGoal";
    case ErrorCode::PartialIntentions: return "PartialIntentions";
    case ErrorCode::InconsistentObservation: return "InconsistentObservation";
    case ErrorCode::EnumerationBudgetExceeded: return "EnumerationBudgetExceeded";
    case ErrorCode::PlanDidNotFail: return "PlanDidNotFail";
    case ErrorCode::ZeroProbabilityMass: return "ZeroProbabilityMass";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "UnknownError";
}

Rational::Rational(long long num, long long den) {
  if (den == 0) raise(ErrorCode::InvalidArgument, "rational with zero denominator");
  value_ = Backend(mp::cpp_int(num), mp::cpp_int(den));
}

Rational Rational::operator/(const Rational& o) const {
  if (o.is_zero()) raise(ErrorCode::InvalidArgument, "rational division by zero");
  return Rational(Backend(value_ / o.value_));
}

Rational Rational::parse(const std::string& text) {
  size_t begin = text.find_first_not_of(" \t");
  size_t end = text.find_last_not_of(" \t");
  if (begin == std::string::npos)
    raise(ErrorCode::ParseError, "empty rational literal");
  std::string s = text.substr(begin, end - begin + 1);

  auto is_int = [](const std::string& t) {
    if (t.empty()) return false;
    size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };

  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!is_int(num) || !is_int(den))
      raise(ErrorCode::ParseError, "bad rational literal '" + s + "'");
    mp::cpp_int d(den);
    if (d == 0) raise(ErrorCode::ParseError, "zero denominator in '" + s + "'");
    return Rational(Backend(mp::cpp_int(num), d));
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (head.empty() || head == "-" || head == "+") head += "0";
    if (!is_int(head) || (!tail.empty() && !is_int(tail)))
      raise(ErrorCode::ParseError, "bad decimal literal '" + s + "'");
    bool negative = head[0] == '-';
    mp::cpp_int scale = 1;
    for (size_t i = 0; i < tail.size(); ++i) scale *= 10;
    mp::cpp_int whole(head);
    mp::cpp_int frac = tail.empty() ? mp::cpp_int(0) : mp::cpp_int(tail);
    mp::cpp_int num = whole * scale + (negative ? -frac : frac);
    return Rational(Backend(num, scale));
  }
  if (!is_int(s)) raise(ErrorCode::ParseError, "bad rational literal '" + s + "'");
  return Rational(Backend(mp::cpp_int(s)));
}

std::string Rational::numerator_str() const { return numerator(value_).str(); }
std::string Rational::denominator_str() const { return denominator(value_).str(); }

std::string Rational::to_string() const {
  if (denominator(value_) == 1) return numerator(value_).str();
  return numerator(value_).str() + "/" + denominator(value_).str();
}

std::string Rational::to_decimal(int places) const {
  mp::cpp_int num = numerator(value_);
  mp::cpp_int den = denominator(value_);
  bool negative = num < 0;
  if (negative) num = -num;
  mp::cpp_int scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  // round half away from zero
  mp::cpp_int scaled = (num * scale * 2 + den) / (den * 2);
  mp::cpp_int whole = scaled / scale;
  mp::cpp_int frac = scaled % scale;
  std::string frac_str = frac.str();
  frac_str.insert(0, static_cast<size_t>(places) - frac_str.size(), '0');
  std::string out = (negative ? "-" : "") + whole.str();
  if (places > 0) out += "." + frac_str;
  return out;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) {
  return os << r.to_string();
}

}  // namespace teamdiag
