#pragma once

#include "wfp/archive.hpp"
#include "wfp/dataset.hpp"
#include "wfp/defense.hpp"
#include "wfp/ensemble.hpp"
#include "wfp/error.hpp"
#include "wfp/features.hpp"
#include "wfp/metrics.hpp"
#include "wfp/model.hpp"
#include "wfp/nn.hpp"
#include "wfp/pipeline.hpp"
#include "wfp/synthgen.hpp"
#include "wfp/traces.hpp"
#include "wfp/training.hpp"
