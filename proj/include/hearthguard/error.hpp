#pragma once

#include <stdexcept>
#include <string>

namespace hearthguard {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define HEARTHGUARD_DEFINE_ERROR(Name)         \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

// fuzzy
HEARTHGUARD_DEFINE_ERROR(UnknownVariable);
HEARTHGUARD_DEFINE_ERROR(ReferenceError);
HEARTHGUARD_DEFINE_ERROR(InvalidModel);

/// Malformed rule or membership document. `locus()` names the line/field.
class ParseError : public Error {
public:
    ParseError(const std::string& locus, const std::string& what)
        : Error(locus.empty() ? what : locus + ": " + what), locus_(locus) {}
    const std::string& locus() const noexcept { return locus_; }

private:
    std::string locus_;
};

// locator
HEARTHGUARD_DEFINE_ERROR(DegenerateExchange);
HEARTHGUARD_DEFINE_ERROR(InsufficientAnchors);
HEARTHGUARD_DEFINE_ERROR(DegenerateGeometry);
HEARTHGUARD_DEFINE_ERROR(UnknownObject);
HEARTHGUARD_DEFINE_ERROR(NonMonotonicTimestamp);

// gamescore
HEARTHGUARD_DEFINE_ERROR(IncompleteSession);
HEARTHGUARD_DEFINE_ERROR(InvalidSession);

// analytics
HEARTHGUARD_DEFINE_ERROR(ZeroVariance);
HEARTHGUARD_DEFINE_ERROR(LengthMismatch);
HEARTHGUARD_DEFINE_ERROR(InsufficientData);
HEARTHGUARD_DEFINE_ERROR(EmptyLog);
HEARTHGUARD_DEFINE_ERROR(CsvError);

// meshbus
HEARTHGUARD_DEFINE_ERROR(InvalidFilter);
HEARTHGUARD_DEFINE_ERROR(InvalidTopic);
HEARTHGUARD_DEFINE_ERROR(NotConnected);
HEARTHGUARD_DEFINE_ERROR(FrameTooLarge);
HEARTHGUARD_DEFINE_ERROR(MalformedFrame);
HEARTHGUARD_DEFINE_ERROR(BindFailure);

/// Scenario document violates its schema. `path()` is a JSON path such as `$.trajectory[3].t`.
class SchemaError : public Error {
public:
    SchemaError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

#undef HEARTHGUARD_DEFINE_ERROR

}  // namespace hearthguard
