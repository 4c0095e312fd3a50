#pragma once

#include <stdexcept>
#include <string>

namespace drwgeom {

// Base for all library errors. `code()` is a stable machine-readable tag
// used by the CLI's JSON error output.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

#define DRWGEOM_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                            \
  public:                                                                \
    explicit Name(const std::string& what) : Error(#Name, what) {}       \
  }

// graph construction
DRWGEOM_DEFINE_ERROR(DisconnectedGraph);
DRWGEOM_DEFINE_ERROR(SelfLoop);
DRWGEOM_DEFINE_ERROR(NonpositiveWeight);
DRWGEOM_DEFINE_ERROR(FeatureDimMismatch);
DRWGEOM_DEFINE_ERROR(DuplicateEdge);
DRWGEOM_DEFINE_ERROR(ParseError);

// kernel evaluation
DRWGEOM_DEFINE_ERROR(DimensionMismatch);
DRWGEOM_DEFINE_ERROR(ExponentOverflow);

// class decomposition
DRWGEOM_DEFINE_ERROR(EmptyClass);
DRWGEOM_DEFINE_ERROR(AllAbsorbing);
DRWGEOM_DEFINE_ERROR(SpectralRadiusNotSubunit);

// hitting law
DRWGEOM_DEFINE_ERROR(SingularSystem);
DRWGEOM_DEFINE_ERROR(SeedNotTransient);
DRWGEOM_DEFINE_ERROR(RadiusExceeded);
DRWGEOM_DEFINE_ERROR(NonDiagonalizable);
DRWGEOM_DEFINE_ERROR(ZeroProbability);

// sensitivity / geometry
DRWGEOM_DEFINE_ERROR(ZeroAbsorptionMass);
DRWGEOM_DEFINE_ERROR(EmptyField);
DRWGEOM_DEFINE_ERROR(ZeroRank);
DRWGEOM_DEFINE_ERROR(RankDeficientBasis);
DRWGEOM_DEFINE_ERROR(LabeledQuery);

// oracles / generators
DRWGEOM_DEFINE_ERROR(TooLarge);
DRWGEOM_DEFINE_ERROR(GenerationFailed);

#undef DRWGEOM_DEFINE_ERROR

}  // namespace drwgeom
