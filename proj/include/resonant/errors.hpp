#pragma once

#include <stdexcept>
#include <string>

namespace resonant {

/// Base of every error raised by the library. The `kind()` tag is stable and
/// is what the CLI writes into its JSON error summaries.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define RESONANT_DEFINE_ERROR(Name)                                           \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    }

// integrators
RESONANT_DEFINE_ERROR(InvalidGrid);
RESONANT_DEFINE_ERROR(NonFiniteState);
RESONANT_DEFINE_ERROR(GridTooShort);

// oscillator
RESONANT_DEFINE_ERROR(InvalidParameter);
RESONANT_DEFINE_ERROR(ResonantDenominator);

// averaging
RESONANT_DEFINE_ERROR(WindowMismatch);
RESONANT_DEFINE_ERROR(WindowOutOfRange);
RESONANT_DEFINE_ERROR(TooFewPoints);

// envelope
RESONANT_DEFINE_ERROR(DenominatorNearZero);
RESONANT_DEFINE_ERROR(DomainError);
RESONANT_DEFINE_ERROR(SingularDenominator);
RESONANT_DEFINE_ERROR(LeftDomain);
RESONANT_DEFINE_ERROR(InfeasibleLevel);
RESONANT_DEFINE_ERROR(ZeroLevel);
RESONANT_DEFINE_ERROR(NotClosedOrbit);
RESONANT_DEFINE_ERROR(TurningPointResolutionError);

// configuration / io
RESONANT_DEFINE_ERROR(ConfigError);
RESONANT_DEFINE_ERROR(IoError);

#undef RESONANT_DEFINE_ERROR

}  // namespace resonant
