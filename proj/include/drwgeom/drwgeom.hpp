#pragma once

#include "drwgeom/decomposition.hpp"
#include "drwgeom/errors.hpp"
#include "drwgeom/experiment.hpp"
#include "drwgeom/generators.hpp"
#include "drwgeom/graph.hpp"
#include "drwgeom/hitting_law.hpp"
#include "drwgeom/io.hpp"
#include "drwgeom/kernel.hpp"
#include "drwgeom/oracles.hpp"
#include "drwgeom/quotient.hpp"
#include "drwgeom/report.hpp"
#include "drwgeom/rng.hpp"
#include "drwgeom/score.hpp"
#include "drwgeom/sensitivity.hpp"
