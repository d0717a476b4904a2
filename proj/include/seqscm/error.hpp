#pragma once

#include <stdexcept>
#include <string>

namespace seqscm {

// Base class for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Spec document problems: syntax, schema, or semantic violations.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Graph problems that prevent further work (cycles, unknown nodes).
class GraphError : public Error {
 public:
  using Error::Error;
};

// Misuse of a model while sampling: missing parent assignments, invalid
// interventions, counterfactuals against a unit from a different model.
class SamplingError : public Error {
 public:
  using Error::Error;
};

class EstimatorError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Scorer backend failures. The kind distinguishes transport problems from
// malformed responses so callers can map them to exit codes.
class ScorerError : public Error {
 public:
  enum class Kind {
    Unreachable,    // transport failure after bounded retries
    Protocol,       // endpoint answered with something unusable
    AllZeroWeight,  // every candidate scored -inf
    Config,         // bad backend configuration
  };

  ScorerError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace seqscm
