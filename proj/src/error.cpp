#include "vulnatlas/error.hpp"

namespace vulnatlas {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LatitudeOutOfRange: return "LatitudeOutOfRange";
    case ErrorCode::AlreadyProjected: return "AlreadyProjected";
    case ErrorCode::NotProjected: return "NotProjected";
    case ErrorCode::NegativeRadius: return "NegativeRadius";
    case ErrorCode::CrsMismatch: return "CrsMismatch";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::MalformedComponent: return "MalformedComponent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingGeoidProperty: return "MissingGeoidProperty";
    case ErrorCode::DuplicateGeoid: return "DuplicateGeoid";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyJoin: return "EmptyJoin";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::SchemaDrift: return "SchemaDrift";
    case ErrorCode::PaginationIncomplete: return "PaginationIncomplete";
    case ErrorCode::MissingFixture: return "MissingFixture";
    case ErrorCode::MissingApiKey: return "MissingApiKey";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::InvalidPercentiles: return "InvalidPercentiles";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::ZeroExpectedCount: return "ZeroExpectedCount";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::MissingValues: return "MissingValues";
    case ErrorCode::ZeroAreaTract: return "ZeroAreaTract";
    case ErrorCode::UnnormalizedInput: return "UnnormalizedInput";
    case ErrorCode::WeightSumInvalid: return "WeightSumInvalid";
    case ErrorCode::TooFewTracts: return "TooFewTracts";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DegenerateFeatures: return "DegenerateFeatures";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::RowMismatch: return "RowMismatch";
    case ErrorCode::AllIslands: return "AllIslands";
    case ErrorCode::TooFewDistinct: return "TooFewDistinct";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace vulnatlas
