#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nahm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidLattice : public Error {
 public:
  using Error::Error;
};

class ResourceLimit : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

struct Violation {
  std::string identity;
  double residual = 0.0;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// Integration stopped because the step size collapsed.
class BlowUp : public Error {
 public:
  BlowUp(double last_t, const std::string& what) : Error(what), last_t_(last_t) {}
  double last_t() const { return last_t_; }

 private:
  double last_t_;
};

// The mode operator has (almost) a zero eigenvalue at one of the ends.
class GapError : public Error {
 public:
  GapError(double gap, const std::string& what) : Error(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

}  // namespace nahm
