// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace topicfb {

// Exit codes of the command-line tool map one-to-one onto these kinds.
enum class ErrorKind { Usage = 2, Data = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

}  // namespace topicfb
