#pragma once

#include "kge/adam.hpp"
#include "kge/checkpoint.hpp"
#include "kge/classes.hpp"
#include "kge/config.hpp"
#include "kge/error.hpp"
#include "kge/eval.hpp"
#include "kge/kg.hpp"
#include "kge/loss.hpp"
#include "kge/model.hpp"
#include "kge/rng.hpp"
#include "kge/sampler.hpp"
#include "kge/train.hpp"
