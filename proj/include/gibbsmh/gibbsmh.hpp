#pragma once

#include "gibbsmh/config.hpp"
#include "gibbsmh/estimators.hpp"
#include "gibbsmh/gibbs_model.hpp"
#include "gibbsmh/graph_lattice.hpp"
#include "gibbsmh/io.hpp"
#include "gibbsmh/limit_theory.hpp"
#include "gibbsmh/oracle.hpp"
#include "gibbsmh/oracle_battery.hpp"
#include "gibbsmh/parallel.hpp"
#include "gibbsmh/random.hpp"
#include "gibbsmh/rwm_sampler.hpp"
#include "gibbsmh/scaling.hpp"
