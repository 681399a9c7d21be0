#include "hydrocla/errors.hpp"

#include <sstream>

namespace hydrocla {

namespace {

std::string message_for(int iterations, double residual, const std::string& context) {
  std::ostringstream os;
  os << "solver did not converge after " << iterations << " iterations (residual " << residual
     << ")";
  if (!context.empty()) os << " [" << context << "]";
  return os.str();
}

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "validation failed:";
  for (const auto& s : v) out += "\n  - " + s;
  return out;
}

}  // namespace

RankDeficient::RankDeficient(std::size_t rank, std::size_t cols)
    : Error("least-squares matrix is rank deficient (rank " + std::to_string(rank) + " < " +
            std::to_string(cols) + ")"),
      rank_(rank),
      cols_(cols) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

NotConverged::NotConverged(int iterations, double residual, std::string context)
    : Error(message_for(iterations, residual, context)),
      iterations_(iterations),
      residual_(residual),
      context_(std::move(context)) {}

}  // namespace hydrocla
