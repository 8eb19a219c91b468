#pragma once

#include <stdexcept>
#include <string>

namespace hifinet {

/// Base for every error raised by the toolkit. `kind()` is a short tag used in
/// CLI diagnostics.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define HIFINET_DEFINE_ERROR(Name, Base, Tag)                          \
  class Name : public Base {                                           \
   public:                                                             \
    explicit Name(const std::string& what) : Base(what) {}             \
    const char* kind() const noexcept override { return Tag; }         \
  }

// Data-side failures (exit code 3).
HIFINET_DEFINE_ERROR(DataError, Error, "data");
HIFINET_DEFINE_ERROR(IngestError, DataError, "ingest");
HIFINET_DEFINE_ERROR(EmptyDatasetError, IngestError, "empty-dataset");
HIFINET_DEFINE_ERROR(AlignmentError, DataError, "alignment");
HIFINET_DEFINE_ERROR(PlanError, DataError, "plan");
HIFINET_DEFINE_ERROR(RoutingError, DataError, "routing");
HIFINET_DEFINE_ERROR(InputError, DataError, "input");
HIFINET_DEFINE_ERROR(DegenerateLabelsError, DataError, "degenerate-labels");

// Configuration failures (exit code 2).
HIFINET_DEFINE_ERROR(ConfigError, Error, "config");

// Programming/contract failures.
HIFINET_DEFINE_ERROR(ShapeError, Error, "shape");
HIFINET_DEFINE_ERROR(DomainError, Error, "domain");

// Non-finite loss during training (exit code 4).
HIFINET_DEFINE_ERROR(DivergenceError, Error, "divergence");

#undef HIFINET_DEFINE_ERROR

}  // namespace hifinet
