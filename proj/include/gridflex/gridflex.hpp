#pragma once

#include "gridflex/error.hpp"
#include "gridflex/random.hpp"
#include "gridflex/curve.hpp"
#include "gridflex/csv.hpp"
#include "gridflex/der.hpp"
#include "gridflex/lstm.hpp"
#include "gridflex/spaces.hpp"
#include "gridflex/outage.hpp"
#include "gridflex/occupant.hpp"
#include "gridflex/rewards.hpp"
#include "gridflex/dataset.hpp"
#include "gridflex/building.hpp"
#include "gridflex/trace.hpp"
#include "gridflex/env.hpp"
#include "gridflex/kpis.hpp"
#include "gridflex/agents.hpp"
#include "gridflex/run.hpp"
#include "gridflex/flat.hpp"
