#pragma once

#include "salience/cli.hpp"
#include "salience/control.hpp"
#include "salience/election.hpp"
#include "salience/error.hpp"
#include "salience/gadgets.hpp"
#include "salience/io.hpp"
#include "salience/lp.hpp"
#include "salience/norms.hpp"
#include "salience/oracles.hpp"
#include "salience/parallel.hpp"
#include "salience/pnorm.hpp"
#include "salience/qp.hpp"
#include "salience/stochastic.hpp"
#include "salience/unanimity.hpp"
