// Error taxonomy shared across the library. Every throwing path uses one of
// these so callers can distinguish caller bugs from bad data or numerics.
#pragma once

#include <stdexcept>
#include <string>

namespace esgnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated API precondition (shape mismatch, empty node set, bad config).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Unparseable or inconsistent external input (files, raw edge lists).
class MalformedInput : public Error {
 public:
  using Error::Error;
};

// Request cannot be satisfied by the data (not enough nodes, no free edges).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Metric undefined on this input (e.g. homophily of an edgeless graph).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced by a numeric kernel; message names the op.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Instance exceeds what a desk-scale oracle is built for.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace esgnn
