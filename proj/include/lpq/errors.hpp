#pragma once

#include <stdexcept>
#include <string>

namespace lpq {

// Error categories map 1:1 onto CLI exit codes (see tools/).
enum class ErrorKind {
  Io,          // exit 2
  Schema,      // exit 3
  Shape,       // exit 4  (shape / model validation)
  Usage,       // exit 1
  Infeasible,  // exit 5  (no feasible configuration in select)
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  static Error io(std::string msg) { return {ErrorKind::Io, std::move(msg)}; }
  static Error schema(std::string msg) { return {ErrorKind::Schema, std::move(msg)}; }
  static Error shape(std::string msg) { return {ErrorKind::Shape, std::move(msg)}; }
  static Error usage(std::string msg) { return {ErrorKind::Usage, std::move(msg)}; }
  static Error infeasible(std::string msg) { return {ErrorKind::Infeasible, std::move(msg)}; }

private:
  ErrorKind kind_;
};

}  // namespace lpq
