#pragma once

// Umbrella header: the full design-space exploration toolkit.

#include "gnnspace/design.hpp"
#include "gnnspace/error.hpp"
#include "gnnspace/evaluator.hpp"
#include "gnnspace/experiment.hpp"
#include "gnnspace/graph.hpp"
#include "gnnspace/model.hpp"
#include "gnnspace/rng.hpp"
#include "gnnspace/sha256.hpp"
#include "gnnspace/space.hpp"
#include "gnnspace/stats.hpp"
#include "gnnspace/taskspace.hpp"
#include "gnnspace/tasks.hpp"
#include "gnnspace/tensor.hpp"
#include "gnnspace/trainer.hpp"
