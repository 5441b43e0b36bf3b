#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace wfp {

// Base of every error thrown by the library. kind() is a stable, machine
// readable tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define WFP_DEFINE_ERROR(Name, Base)                                 \
  class Name : public Base {                                         \
   public:                                                           \
    using Base::Base;                                                \
    const char* kind() const noexcept override { return #Name; }     \
  }

WFP_DEFINE_ERROR(TraceError, Error);
WFP_DEFINE_ERROR(EmptyTrace, TraceError);
WFP_DEFINE_ERROR(OrderError, TraceError);
WFP_DEFINE_ERROR(LayoutError, Error);
WFP_DEFINE_ERROR(CorpusError, Error);
WFP_DEFINE_ERROR(SplitError, Error);
WFP_DEFINE_ERROR(DatasetError, Error);
WFP_DEFINE_ERROR(ConfigError, Error);
WFP_DEFINE_ERROR(ShapeError, Error);
WFP_DEFINE_ERROR(EnsembleError, Error);
WFP_DEFINE_ERROR(RangeError, Error);
WFP_DEFINE_ERROR(MetricError, Error);
WFP_DEFINE_ERROR(OverheadError, Error);
WFP_DEFINE_ERROR(IoError, Error);

#undef WFP_DEFINE_ERROR

// Malformed line in a trace file. line() is 1-based.
class ParseError : public TraceError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : TraceError("line " + std::to_string(line) + ": " + what), line_(line) {}
  const char* kind() const noexcept override { return "ParseError"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Non-finite training loss. epoch is 1-based, batch 0-based.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, std::size_t batch)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  const char* kind() const noexcept override { return "DivergenceError"; }
  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

}  // namespace wfp
