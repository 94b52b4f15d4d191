#pragma once

#include <stdexcept>
#include <string>

namespace hre {

// All library failures derive from hre::Error so callers (the CLI in
// particular) can map them to exit codes without catching std::exception.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define HRE_DEFINE_ERROR(Name)                 \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

// numerics
HRE_DEFINE_ERROR(DimensionMismatch);
HRE_DEFINE_ERROR(NotPositiveDefinite);
HRE_DEFINE_ERROR(NoSignChange);
HRE_DEFINE_ERROR(MaxIterations);
HRE_DEFINE_ERROR(ToleranceNotMet);

// model / inference
HRE_DEFINE_ERROR(DomainError);
HRE_DEFINE_ERROR(OverflowError);
HRE_DEFINE_ERROR(NonPositiveCurvature);
HRE_DEFINE_ERROR(CorrectionTooLarge);

// estimation
HRE_DEFINE_ERROR(DegenerateDesign);
HRE_DEFINE_ERROR(LineSearchFailed);
HRE_DEFINE_ERROR(SingularM);

// prediction / io
HRE_DEFINE_ERROR(GroupTooSmall);
HRE_DEFINE_ERROR(UnknownGroup);

#undef HRE_DEFINE_ERROR

// Input parsing failure; carries enough location to point the user at the
// offending cell.
class ParseError : public Error {
public:
    ParseError(const std::string& file, long row, const std::string& column,
               const std::string& what)
        : Error(file + ": row " + std::to_string(row) +
                (column.empty() ? "" : ", column '" + column + "'") + ": " + what),
          row_(row) {}

    long row() const { return row_; }

private:
    long row_;
};

}  // namespace hre
