#pragma once

#include "mirrorkit/errors.hpp"
#include "mirrorkit/potential.hpp"
#include "mirrorkit/loss.hpp"
#include "mirrorkit/completion.hpp"
#include "mirrorkit/model.hpp"
#include "mirrorkit/rng.hpp"
#include "mirrorkit/experiment_config.hpp"
#include "mirrorkit/descent.hpp"
#include "mirrorkit/samplers.hpp"
#include "mirrorkit/audit.hpp"
#include "mirrorkit/parallel.hpp"
#include "mirrorkit/risk.hpp"
#include "mirrorkit/implicit.hpp"
#include "mirrorkit/convergence.hpp"
#include "mirrorkit/config.hpp"
#include "mirrorkit/csv.hpp"
#include "mirrorkit/cli.hpp"
