// Error taxonomy shared by every module. Each condition gets its own type so
// callers (and the CLI's JSON error payloads) can dispatch on the kind.
#pragma once

#include <stdexcept>
#include <string>

namespace stratperm {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define STRATPERM_ERROR(NAME)                                            \
    class NAME : public Error {                                          \
    public:                                                              \
        explicit NAME(const std::string& msg) : Error(#NAME, msg) {}     \
    }

STRATPERM_ERROR(DegenerateVariance);   // sigma_A = 0 where a scale is required
STRATPERM_ERROR(DomainError);          // argument outside the stated domain
STRATPERM_ERROR(ZeroStratumRatio);     // R^2_[k] = 0 in a ratio-weighted rate
STRATPERM_ERROR(DegenerateLayout);     // empty layout / empty stratum / n = K where pairs are needed
STRATPERM_ERROR(StratumTooLarge);      // coupling table would exceed the configured cap
STRATPERM_ERROR(BudgetExceeded);       // enumeration or retry budget exhausted
STRATPERM_ERROR(LayoutMismatch);       // operands carry different stratifications
STRATPERM_ERROR(SingularCovariance);   // component covariance not invertible
STRATPERM_ERROR(NotStandardized);      // input fails the standardization condition
STRATPERM_ERROR(CountMismatch);        // realized per-stratum counts differ from the design
STRATPERM_ERROR(EventUnreachable);     // conditioning event has probability zero
STRATPERM_ERROR(DegenerateScores);     // score vector admits no variation
STRATPERM_ERROR(ParseError);           // malformed JSON/CSV input
STRATPERM_ERROR(InvariantViolation);   // structural validation failed; message names the invariant

#undef STRATPERM_ERROR

} // namespace stratperm
