#pragma once

#include <stdexcept>
#include <string>

namespace bethegeom {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define BETHEGEOM_DEFINE_ERROR(Name) \
  struct Name : Error {              \
    using Error::Error;              \
  };

BETHEGEOM_DEFINE_ERROR(ParseError)
BETHEGEOM_DEFINE_ERROR(InvariantViolation)
BETHEGEOM_DEFINE_ERROR(IoError)
BETHEGEOM_DEFINE_ERROR(IndexOutOfRange)
BETHEGEOM_DEFINE_ERROR(ZeroConstantTerm)
BETHEGEOM_DEFINE_ERROR(InsufficientSamples)
BETHEGEOM_DEFINE_ERROR(DegenerateFactor)
BETHEGEOM_DEFINE_ERROR(InvalidWeight)
BETHEGEOM_DEFINE_ERROR(ZeroSpectralParameter)
BETHEGEOM_DEFINE_ERROR(SpectralParameterAtPole)
BETHEGEOM_DEFINE_ERROR(EvaluationAtRoot)
BETHEGEOM_DEFINE_ERROR(RootAtPole)
BETHEGEOM_DEFINE_ERROR(CoincidentRoots)
BETHEGEOM_DEFINE_ERROR(ResonantRatio)
BETHEGEOM_DEFINE_ERROR(SingularDenominator)
BETHEGEOM_DEFINE_ERROR(PoleCollision)
BETHEGEOM_DEFINE_ERROR(PathDivergence)
BETHEGEOM_DEFINE_ERROR(PathCollision)
BETHEGEOM_DEFINE_ERROR(SingularJacobian)
BETHEGEOM_DEFINE_ERROR(TruncationMismatch)
BETHEGEOM_DEFINE_ERROR(ExtrapolationDiverged)
BETHEGEOM_DEFINE_ERROR(NoPolynomialSolution)
BETHEGEOM_DEFINE_ERROR(IllConditioned)
BETHEGEOM_DEFINE_ERROR(ZeroTwist)
BETHEGEOM_DEFINE_ERROR(PoleAtEvaluation)
BETHEGEOM_DEFINE_ERROR(SingularGauge)
BETHEGEOM_DEFINE_ERROR(InexactDivision)
BETHEGEOM_DEFINE_ERROR(NewtonDiverged)
BETHEGEOM_DEFINE_ERROR(CoincidentCoordinates)

#undef BETHEGEOM_DEFINE_ERROR

}  // namespace bethegeom
