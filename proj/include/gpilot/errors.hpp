#pragma once

#include <stdexcept>
#include <string>

namespace gpilot {

// Every failure the library reports derives from Error so callers can catch
// one type at the process boundary and still switch on the concrete kind.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GPILOT_DEFINE_ERROR(Name)                   \
    class Name : public Error {                     \
    public:                                         \
        using Error::Error;                         \
    }

GPILOT_DEFINE_ERROR(InputError);
GPILOT_DEFINE_ERROR(FormatError);
GPILOT_DEFINE_ERROR(ProtocolError);
GPILOT_DEFINE_ERROR(TruncationError);
GPILOT_DEFINE_ERROR(ResourceError);
GPILOT_DEFINE_ERROR(ContractError);
GPILOT_DEFINE_ERROR(UnsupportedFeatureError);
GPILOT_DEFINE_ERROR(TrackingLostError);
GPILOT_DEFINE_ERROR(InitializationError);
GPILOT_DEFINE_ERROR(FrustumError);

#undef GPILOT_DEFINE_ERROR

/// Malformed XML or cascade content; carries the 1-based source location.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace gpilot
