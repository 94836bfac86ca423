#ifndef LOSSPRED_ERROR_H_
#define LOSSPRED_ERROR_H_

#include <stdexcept>
#include <string>

namespace losspred {

// Root of every error raised by the library. Subclasses name the contract
// that was broken so callers (and the CLI) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LOSSPRED_DEFINE_ERROR(Name)      \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// Input outside the mathematical domain of an operation (e.g. v not in [0,1]).
LOSSPRED_DEFINE_ERROR(DomainError);
// A computed value left its guaranteed range.
LOSSPRED_DEFINE_ERROR(RangeError);
LOSSPRED_DEFINE_ERROR(ConfigError);
LOSSPRED_DEFINE_ERROR(DataError);
LOSSPRED_DEFINE_ERROR(ArityError);
LOSSPRED_DEFINE_ERROR(UnsupportedRepresentation);
LOSSPRED_DEFINE_ERROR(EmptySubgroup);
LOSSPRED_DEFINE_ERROR(SchemaError);
LOSSPRED_DEFINE_ERROR(LabelError);
// The last two signal implementation bugs rather than data properties.
LOSSPRED_DEFINE_ERROR(SandwichViolation);
LOSSPRED_DEFINE_ERROR(BasisViolation);

#undef LOSSPRED_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row, long column)
      : Error(what + " (row " + std::to_string(row) + ", column " +
              std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  long row() const { return row_; }
  long column() const { return column_; }

 private:
  long row_;
  long column_;
};

}  // namespace losspred

#endif  // LOSSPRED_ERROR_H_
