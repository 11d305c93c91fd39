#pragma once

#include "accumbias/analytics.hpp"
#include "accumbias/commands.hpp"
#include "accumbias/config.hpp"
#include "accumbias/csv.hpp"
#include "accumbias/engine.hpp"
#include "accumbias/errors.hpp"
#include "accumbias/inference.hpp"
#include "accumbias/meta_core.hpp"
#include "accumbias/normal.hpp"
#include "accumbias/policies.hpp"
#include "accumbias/rng.hpp"
#include "accumbias/tally.hpp"
#include "accumbias/trajectory.hpp"
#include "accumbias/version.hpp"
