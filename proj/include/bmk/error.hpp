#pragma once

#include <stdexcept>
#include <string>

namespace bmk {

/// Base of every exception the core throws; the C API maps `code()` onto
/// its status values.
class Error : public std::runtime_error {
 public:
  enum class Code {
    kInvalidArgument,
    kParse,
    kConstruction,
    kNumeric,
    kResource,
    kDomain,
  };
  Error(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(Code::kInvalidArgument, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(Code::kParse, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(Code::kNumeric, w) {}
};
struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(Code::kResource, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(Code::kDomain, w) {}
};

/// Distinct construction failures of analytic convex functions.
class ConstructionError : public Error {
 public:
  enum class Kind { kNotPositiveDefinite, kExponentTooSmall, kNonConvexSplice, kSpliceNotQuadratic, kDegenerate, kUnknownFamily };
  ConstructionError(Kind kind, const std::string& w) : Error(Code::kConstruction, w), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace bmk
