#pragma once

#include "qwsearch/analysis.hpp"
#include "qwsearch/ensemble.hpp"
#include "qwsearch/error.hpp"
#include "qwsearch/graph.hpp"
#include "qwsearch/hamiltonian.hpp"
#include "qwsearch/propagator.hpp"
#include "qwsearch/random.hpp"
#include "qwsearch/rtn.hpp"
#include "qwsearch/theory.hpp"
