#pragma once

#include "linpal/core.hpp"
#include "linpal/error.hpp"
#include "linpal/featurizer.hpp"
#include "linpal/io.hpp"
#include "linpal/log.hpp"
#include "linpal/metrics.hpp"
#include "linpal/model.hpp"
#include "linpal/pipeline.hpp"
#include "linpal/scorer.hpp"
#include "linpal/simulator.hpp"
#include "linpal/stats.hpp"
#include "linpal/trainer.hpp"
