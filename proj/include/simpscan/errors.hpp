#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace simpscan {

// Base for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- dataset / input errors -------------------------------------------------
class FileError : public Error { public: using Error::Error; };
class SchemaError : public Error { public: using Error::Error; };

// Parse failure bound to a 1-based physical row of the input file
// (row 1 is the header).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t row) : Error(msg), row_(row) {}
    std::size_t row() const noexcept { return row_; }
private:
    std::size_t row_;
};

class UnknownColumn : public Error { public: using Error::Error; };
class SameColumn : public Error { public: using Error::Error; };

// --- numeric / statistical errors -------------------------------------------
class EmptyInput : public Error { public: using Error::Error; };
class LengthMismatch : public Error { public: using Error::Error; };
class ZeroVariance : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class DegenerateFit : public Error { public: using Error::Error; };
class ConstantOutcome : public Error { public: using Error::Error; };
class TooFewCovariates : public Error { public: using Error::Error; };
class InvalidSpec : public Error { public: using Error::Error; };

} // namespace simpscan
