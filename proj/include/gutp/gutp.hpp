#pragma once

#include "gutp/channel.hpp"
#include "gutp/crlb.hpp"
#include "gutp/errors.hpp"
#include "gutp/experiments.hpp"
#include "gutp/gtrs.hpp"
#include "gutp/numerics.hpp"
#include "gutp/random.hpp"
#include "gutp/scenario.hpp"
#include "gutp/weighting.hpp"
