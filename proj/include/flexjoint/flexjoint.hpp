#pragma once

#include "flexjoint/random.hpp"
#include "flexjoint/plant.hpp"
#include "flexjoint/fuzzy.hpp"
#include "flexjoint/control.hpp"
#include "flexjoint/analysis.hpp"
#include "flexjoint/lbfgs.hpp"
#include "flexjoint/gp.hpp"
#include "flexjoint/bayes_opt.hpp"
#include "flexjoint/objectives.hpp"
#include "flexjoint/metrics.hpp"
#include "flexjoint/io.hpp"
#include "flexjoint/experiment.hpp"
