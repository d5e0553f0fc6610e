#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dare {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One problem found while validating input. `row` is the 1-based data row
// (header excluded); 0 means the issue is not tied to a row.
struct Issue {
  std::size_t row = 0;
  std::string column;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Issue> issues);

  const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  std::vector<Issue> issues_;
};

// Raised when optimization or a factorization cannot produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dare
