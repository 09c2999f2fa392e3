#pragma once

#include <stdexcept>
#include <string>

namespace shred {

/// Base class for every failure raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SHRED_DEFINE_ERROR(Name)                   \
    class Name : public Error {                    \
    public:                                        \
        explicit Name(const std::string& what)     \
            : Error(#Name ": " + what) {}          \
    }

// datamodel
SHRED_DEFINE_ERROR(ConstantFieldError);
SHRED_DEFINE_ERROR(RatioError);
SHRED_DEFINE_ERROR(FormatError);
SHRED_DEFINE_ERROR(DimensionError);
SHRED_DEFINE_ERROR(OrderError);
// compression
SHRED_DEFINE_ERROR(ConvergenceError);
SHRED_DEFINE_ERROR(EmptySpectrumError);
// sensing
SHRED_DEFINE_ERROR(IndexError);
SHRED_DEFINE_ERROR(ExhaustionError);
SHRED_DEFINE_ERROR(GeometryError);
// network
SHRED_DEFINE_ERROR(ShapeError);
SHRED_DEFINE_ERROR(DivergenceError);
// synthgen
SHRED_DEFINE_ERROR(CflError);
SHRED_DEFINE_ERROR(PoissonDivergenceError);
SHRED_DEFINE_ERROR(UnknownPerturbation);
// cli / config
SHRED_DEFINE_ERROR(ConfigError);

#undef SHRED_DEFINE_ERROR

} // namespace shred
