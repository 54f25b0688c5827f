// Umbrella header.
#pragma once

#include "bts/bernoulli_policies.hpp"
#include "bts/bootstrap_oracle.hpp"
#include "bts/config_io.hpp"
#include "bts/core.hpp"
#include "bts/environments.hpp"
#include "bts/experiment.hpp"
#include "bts/linear_policies.hpp"
#include "bts/results_io.hpp"
