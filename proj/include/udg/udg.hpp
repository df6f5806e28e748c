#pragma once

#include "buffer_io.hpp"
#include "cem.hpp"
#include "common.hpp"
#include "config.hpp"
#include "diversity.hpp"
#include "episodic_model.hpp"
#include "experiment.hpp"
#include "finite_mdp.hpp"
#include "kdtree.hpp"
#include "mdp.hpp"
#include "network_simplex.hpp"
#include "offline.hpp"
#include "pipeline.hpp"
#include "planner.hpp"
#include "policy.hpp"
#include "svg.hpp"
#include "transport.hpp"
