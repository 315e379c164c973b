#pragma once

#include "squadgen/backend.hpp"
#include "squadgen/context_generation.hpp"
#include "squadgen/dataset_mixer.hpp"
#include "squadgen/eval_metrics.hpp"
#include "squadgen/pipeline.hpp"
#include "squadgen/qa_synthesis.hpp"
#include "squadgen/report.hpp"
#include "squadgen/squad_data.hpp"
