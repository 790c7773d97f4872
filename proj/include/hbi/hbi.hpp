#pragma once

#include "hbi/digest.hpp"
#include "hbi/errors.hpp"
#include "hbi/infotheory.hpp"
#include "hbi/learners.hpp"
#include "hbi/prob.hpp"
#include "hbi/rng.hpp"
#include "hbi/serialize.hpp"
#include "hbi/supervision.hpp"
#include "hbi/sweep.hpp"
#include "hbi/version.hpp"
#include "hbi/witness.hpp"
