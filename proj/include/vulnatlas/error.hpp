#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnatlas {

enum class ErrorCode {
  // geometry
  LatitudeOutOfRange,
  AlreadyProjected,
  NotProjected,
  NegativeRadius,
  CrsMismatch,
  InvalidGeometry,
  // ingest
  MalformedComponent,
  ParseError,
  MissingGeoidProperty,
  DuplicateGeoid,
  MissingColumn,
  NonNumericCell,
  EmptyJoin,
  KeyMismatch,
  // acquire
  HttpError,
  QuotaExceeded,
  SchemaDrift,
  PaginationIncomplete,
  MissingFixture,
  MissingApiKey,
  // preprocess / stats
  TooFewValues,
  InvalidPercentiles,
  ZeroVariance,
  SampleSizeOutOfRange,
  DegenerateColumn,
  TooFewPairs,
  ZeroExpectedCount,
  TooFewPoints,
  MissingValues,
  // indices
  ZeroAreaTract,
  UnnormalizedInput,
  WeightSumInvalid,
  TooFewTracts,
  // cluster
  KTooLarge,
  DegenerateFeatures,
  SingleCluster,
  RowMismatch,
  // spatial
  AllIslands,
  TooFewDistinct,
  // pipeline
  ConfigError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `code()` identifies the failure
/// class; `what()` carries the human-readable detail (offending key, row,
/// column, HTTP status, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace vulnatlas
