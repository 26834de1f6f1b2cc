#pragma once

#include <stdexcept>
#include <string>

namespace featdiag {

// Base for every library error. Subtypes mirror the failure conditions of
// the public operations so callers can catch precisely.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// data model
struct SchemaMismatch final : Error { using Error::Error; };
struct EmptyDataset final : Error { using Error::Error; };
struct NonBinaryTarget final : Error { using Error::Error; };
struct InsufficientRows final : Error { using Error::Error; };

// golden statistics
struct LengthMismatch final : Error { using Error::Error; };
struct DegenerateDataset final : Error { using Error::Error; };
struct ZeroCovariance final : Error { using Error::Error; };
struct ConstantFeature final : Error { using Error::Error; };

// sampling
struct NotGoldenNumeric final : Error { using Error::Error; };
struct PoolTooSmall final : Error { using Error::Error; };

// prompting
struct MissingTaskDescription final : Error { using Error::Error; };

// gateway
struct MissingCredentials final : Error { using Error::Error; };
struct EndpointError final : Error { using Error::Error; };
struct ReplayMiss final : Error { using Error::Error; };

// parsing
struct NoRankingFound final : Error { using Error::Error; };
struct NoRulesFound final : Error { using Error::Error; };

// scoring / selection
struct InvalidK final : Error { using Error::Error; };
struct EmptyTrials final : Error { using Error::Error; };

// prediction
struct SingleClassTraining final : Error { using Error::Error; };
struct SingleClass final : Error { using Error::Error; };
struct EmptyEnsemble final : Error { using Error::Error; };
struct RowMisalignment final : Error { using Error::Error; };

// pipeline
struct NoRuleFiles final : Error { using Error::Error; };
struct AllGenerationsFailed final : Error { using Error::Error; };
struct ConfigError final : Error { using Error::Error; };

} // namespace featdiag
