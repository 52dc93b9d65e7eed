#pragma once

#include <stdexcept>
#include <string>

namespace pt {

// Every failure the library reports carries a stable kind tag so the CLI can
// emit a machine-readable summary.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define PT_ERROR_KIND(Name)                                          \
    struct Name : Error {                                            \
        explicit Name(const std::string& w) : Error(#Name, w) {}     \
    };

PT_ERROR_KIND(InvalidArgument)
PT_ERROR_KIND(Defective)
PT_ERROR_KIND(NotPseudoHermitian)
PT_ERROR_KIND(SingularMatrix)
PT_ERROR_KIND(SingularMetric)
PT_ERROR_KIND(NotConverged)
PT_ERROR_KIND(OutOfRange)
PT_ERROR_KIND(ComplexPartitionFunction)
PT_ERROR_KIND(NonRealSpectrum)
PT_ERROR_KIND(NonRealResult)
PT_ERROR_KIND(IsentropeNotFound)
PT_ERROR_KIND(ConfigError)

#undef PT_ERROR_KIND

}  // namespace pt
