#pragma once

#include <stdexcept>
#include <string>

namespace dmtl {

/// Base of every error thrown by the library. `kind()` names the category so
/// the CLI can report which stage failed and why.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define DMTL_DECLARE_ERROR(Name, tag)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(what) {}            \
    const char* kind() const noexcept override { return tag; }         \
  };

DMTL_DECLARE_ERROR(ShapeError, "shape")
DMTL_DECLARE_ERROR(DomainError, "domain")
DMTL_DECLARE_ERROR(IndexError, "index")
DMTL_DECLARE_ERROR(TapeError, "tape")
DMTL_DECLARE_ERROR(ParseError, "parse")
DMTL_DECLARE_ERROR(ValidationError, "validation")
DMTL_DECLARE_ERROR(SchemaError, "schema")
DMTL_DECLARE_ERROR(ConfigError, "config")
DMTL_DECLARE_ERROR(DivergenceError, "divergence")
DMTL_DECLARE_ERROR(InvariantError, "invariant")
DMTL_DECLARE_ERROR(ProtocolError, "protocol")

#undef DMTL_DECLARE_ERROR

}  // namespace dmtl
