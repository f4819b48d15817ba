#pragma once

#include "fbvp/beam.hpp"
#include "fbvp/calculus.hpp"
#include "fbvp/chart_nbc.hpp"
#include "fbvp/error.hpp"
#include "fbvp/eval.hpp"
#include "fbvp/expr.hpp"
#include "fbvp/geodesic.hpp"
#include "fbvp/geometry.hpp"
#include "fbvp/jet.hpp"
#include "fbvp/lagrangian.hpp"
#include "fbvp/oracle.hpp"
#include "fbvp/parser.hpp"
#include "fbvp/prolongation.hpp"
#include "fbvp/solve.hpp"
#include "fbvp/stencil.hpp"
#include "fbvp/variational.hpp"
