#pragma once

#include "featdiag/common.hpp"
#include "featdiag/data_model.hpp"
#include "featdiag/errors.hpp"
#include "featdiag/example_sampler.hpp"
#include "featdiag/golden_stats.hpp"
#include "featdiag/llm_gateway.hpp"
#include "featdiag/pipeline.hpp"
#include "featdiag/predictor.hpp"
#include "featdiag/prompt_engine.hpp"
#include "featdiag/response_parser.hpp"
#include "featdiag/scorer.hpp"
