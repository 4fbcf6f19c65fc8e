#pragma once

#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

namespace stacksense {

// Root of every error thrown by the library. The CLI maps each subclass to
// its own exit code (see tools/stacksense.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t got)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CycleDetected : public Error {
 public:
  explicit CycleDetected(std::vector<std::size_t> cycle);
  const std::vector<std::size_t>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::size_t> cycle_;
};

class NonDifferentiableActivation : public Error {
 public:
  using Error::Error;
};

class Diverged : public Error {
 public:
  explicit Diverged(std::size_t generation)
      : Error("training diverged at generation " + std::to_string(generation)),
        generation_(generation) {}
  std::size_t generation() const noexcept { return generation_; }

 private:
  std::size_t generation_;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

class NotConcrete : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptModel : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

// Raised by the hierarchy trainer; names the net whose stage failed and keeps
// the original exception so callers can still dispatch on its type.
class StageError : public Error {
 public:
  StageError(std::string net, const std::string& message, std::exception_ptr cause)
      : Error("net '" + net + "': " + message), net_(std::move(net)), cause_(std::move(cause)) {}
  const std::string& net() const noexcept { return net_; }
  const std::exception_ptr& cause() const noexcept { return cause_; }

 private:
  std::string net_;
  std::exception_ptr cause_;
};

}  // namespace stacksense
